#!/usr/bin/env python3
import logging
import re
from configparser import ConfigParser
from pathlib import Path

logger = logging.getLogger(__name__)

SI_PREFIXES = {
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "µ": 1e-6,
    "m": 1e-3,
    "k": 1e3,
    "M": 1e6,
    "G": 1e9,
}

# number, optional SI prefix, optional unit letters (H, F, Ohm, V, Hz, ...)
_SI_PATTERN = re.compile(
    r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([pnuµmkMG]?)([A-Za-zΩ]*)\s*$")


def parse_si(text: str) -> float:
    """Parse '31.7uH', '300kHz', '105mOhm' or a plain number.

    Prefixes are case-sensitive: 'm' is milli, 'M' is mega.
    """
    match = _SI_PATTERN.match(str(text))
    if not match:
        raise ValueError(f"not a number with an optional SI suffix: '{text}'")
    number, prefix, _unit = match.groups()
    return float(number) * SI_PREFIXES.get(prefix, 1.0)


def parse_conf(conf_path: Path) -> dict:
    """Read a flat 'key = value' file into a dict of raw strings.

    The file has no section headers, so a synthetic [root] header is
    prepended before handing it to ConfigParser. Keys come back lower-cased.
    """
    raw = Path(conf_path).read_text(encoding="utf-8")
    cfg = ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                       inline_comment_prefixes=("#",), interpolation=None)
    cfg.read_string("[root]\n" + raw, source=str(conf_path))
    return {key: value.strip() for key, value in cfg["root"].items()}


def ensure_out_dir(out_dir) -> Path:
    """Create the output directory if needed; existing files are overwritten, never deleted."""
    out_dir = Path(out_dir)
    if out_dir.exists() and not out_dir.is_dir():
        raise NotADirectoryError(f"output path exists and is not a directory: {out_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.debug("Output directory ready: %s", out_dir)
    return out_dir
