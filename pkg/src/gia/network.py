"""Network model: configuration, alignment set, random channels, config files.

Node indices are 1-based throughout the public surface, matching standard
usage: receivers are ``1..K`` and transmitters are ``1..K+J`` (the K
legitimate transmitters first, then the J jammers).  Per-node tuples are
stored densely, so the entry for node ``k`` lives at index ``k - 1``.

A channel state is a plain dict mapping each (receiver, transmitter) pair
``(k, j)`` - direct links included - to an ``N_k x M_j`` complex matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ConfigError",
    "ConfigParseError",
    "NetworkConfig",
    "TransceiverSet",
    "Pair",
    "Channel",
    "validate_config",
    "alignment_all",
    "canonical_alignment",
    "scale_config",
    "generate_channel",
    "save_config",
    "load_config",
]

Pair = tuple[int, int]
Channel = dict[Pair, np.ndarray]

MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    """A network configuration or alignment set violates its invariants."""


class ConfigParseError(ConfigError):
    """A config file could not be parsed; the message names the line."""


@dataclass(frozen=True)
class NetworkConfig:
    """Dimensions of the legitimate network.

    Attributes
    ----------
    K : int
        Number of transmitter-receiver pairs.
    J : int
        Number of jammer transmitters (no paired receiver).
    M : tuple of int
        Transmit antennas, one per transmitter ``1..K+J``.
    N : tuple of int
        Receive antennas, one per receiver ``1..K``.
    d : tuple of int
        Data streams, one per transmitter ``1..K+J``.
    """

    K: int
    J: int
    M: tuple[int, ...]
    N: tuple[int, ...]
    d: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "J", int(self.J))
        object.__setattr__(self, "M", tuple(int(x) for x in self.M))
        object.__setattr__(self, "N", tuple(int(x) for x in self.N))
        object.__setattr__(self, "d", tuple(int(x) for x in self.d))

    @property
    def n_tx(self) -> int:
        """Total number of transmitters, ``K + J``."""
        return self.K + self.J


@dataclass(frozen=True)
class TransceiverSet:
    """Full decoders ``U[k-1]`` (``N_k x d_k``) and precoders ``V[j-1]`` (``M_j x d_j``)."""

    U: tuple[np.ndarray, ...]
    V: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "U", tuple(np.asarray(u, dtype=np.complex128) for u in self.U))
        object.__setattr__(self, "V", tuple(np.asarray(v, dtype=np.complex128) for v in self.V))


def validate_config(cfg: NetworkConfig) -> None:
    """Check all NetworkConfig invariants; raise ConfigError naming the offender."""
    if cfg.K < 1:
        raise ConfigError(f"K must be positive, got {cfg.K}")
    if cfg.J < 0:
        raise ConfigError(f"J must be nonnegative, got {cfg.J}")
    if len(cfg.M) != cfg.n_tx:
        raise ConfigError(f"M must list K+J={cfg.n_tx} values, got {len(cfg.M)}")
    if len(cfg.d) != cfg.n_tx:
        raise ConfigError(f"d must list K+J={cfg.n_tx} values, got {len(cfg.d)}")
    if len(cfg.N) != cfg.K:
        raise ConfigError(f"N must list K={cfg.K} values, got {len(cfg.N)}")
    for j in range(1, cfg.n_tx + 1):
        if cfg.M[j - 1] < 1:
            raise ConfigError(f"M_{j} must be positive, got {cfg.M[j - 1]}")
        if cfg.d[j - 1] < 1:
            raise ConfigError(f"d_{j} must be positive, got {cfg.d[j - 1]}")
        if cfg.d[j - 1] > cfg.M[j - 1]:
            raise ConfigError(f"d_{j}={cfg.d[j - 1]} exceeds transmit antennas M_{j}={cfg.M[j - 1]}")
    for k in range(1, cfg.K + 1):
        if cfg.N[k - 1] < 1:
            raise ConfigError(f"N_{k} must be positive, got {cfg.N[k - 1]}")
        if cfg.d[k - 1] > cfg.N[k - 1]:
            raise ConfigError(f"d_{k}={cfg.d[k - 1]} exceeds receive antennas N_{k}={cfg.N[k - 1]}")


def alignment_all(cfg: NetworkConfig) -> tuple[Pair, ...]:
    """All cross pairs ``(k, j)``, ``k in 1..K``, ``j in 1..K+J``, ``k != j``.

    The returned tuple is in canonical (lexicographic) order; its length is
    ``K * (K + J - 1)``.
    """
    validate_config(cfg)
    return tuple(
        (k, j)
        for k in range(1, cfg.K + 1)
        for j in range(1, cfg.n_tx + 1)
        if k != j
    )


def canonical_alignment(cfg: NetworkConfig, pairs) -> tuple[Pair, ...]:
    """Validate an alignment set and return it sorted lexicographically.

    The canonical order fixes the row-block order of the coefficient matrix,
    so every consumer normalizes through here.
    """
    validate_config(cfg)
    out = sorted({(int(k), int(j)) for (k, j) in pairs})
    for k, j in out:
        if not 1 <= k <= cfg.K:
            raise ConfigError(f"alignment pair ({k},{j}): receiver index out of range 1..{cfg.K}")
        if not 1 <= j <= cfg.n_tx:
            raise ConfigError(f"alignment pair ({k},{j}): transmitter index out of range 1..{cfg.n_tx}")
        if k == j:
            raise ConfigError(f"alignment pair ({k},{j}): direct links cannot be aligned")
    return tuple(out)


def scale_config(cfg: NetworkConfig, c: int) -> NetworkConfig:
    """Multiply every antenna and stream count by the positive integer ``c``."""
    validate_config(cfg)
    c = int(c)
    if c < 1:
        raise ConfigError(f"scale factor must be a positive integer, got {c}")
    return NetworkConfig(
        K=cfg.K,
        J=cfg.J,
        M=tuple(c * m for m in cfg.M),
        N=tuple(c * n for n in cfg.N),
        d=tuple(c * x for x in cfg.d),
    )


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def generate_channel(cfg: NetworkConfig, seed: int) -> Channel:
    """Draw i.i.d. unit-variance circularly-symmetric complex Gaussian channels.

    Every matrix ``H_kj`` comes from its own substream keyed by
    ``(seed, k, j)``, so a given link's realization does not depend on which
    other links are generated or on iteration order.  Direct links ``H_kk``
    are always included.
    """
    validate_config(cfg)
    seed = _check_seed(seed)
    channel: Channel = {}
    for k in range(1, cfg.K + 1):
        for j in range(1, cfg.n_tx + 1):
            rng = np.random.default_rng(np.random.SeedSequence([seed, k, j]))
            shape = (cfg.N[k - 1], cfg.M[j - 1])
            channel[(k, j)] = (
                rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            ) / np.sqrt(2.0)
    return channel


def check_channel(cfg: NetworkConfig, channel: Channel) -> None:
    """Verify a channel dict covers all pairs with the right finite shapes."""
    for k in range(1, cfg.K + 1):
        for j in range(1, cfg.n_tx + 1):
            if (k, j) not in channel:
                raise ConfigError(f"channel state is missing pair ({k},{j})")
            h = channel[(k, j)]
            want = (cfg.N[k - 1], cfg.M[j - 1])
            if h.shape != want:
                raise ConfigError(
                    f"channel ({k},{j}) has shape {h.shape}, expected {want}"
                )


# Config file format: flat `key = value` lines, one key each of K, J, M, N, d
# (comma-separated integer lists for M/N/d), `alignment` (either `all`,
# `none`, or semicolon-separated `k,j` pairs) and an optional unsigned
# 64-bit `seed`.  Blank lines and `#` comments are ignored; unknown or
# duplicate keys are rejected.

_REQUIRED_KEYS = ("K", "J", "M", "N", "d", "alignment")


def save_config(path, cfg: NetworkConfig, alignment, seed: int | None = None) -> None:
    """Write a config file; ``load_config`` round-trips it exactly."""
    validate_config(cfg)
    pairs = canonical_alignment(cfg, alignment)
    if pairs == alignment_all(cfg):
        align_text = "all"
    elif not pairs:
        align_text = "none"
    else:
        align_text = "; ".join(f"{k},{j}" for k, j in pairs)
    lines = [
        f"K = {cfg.K}",
        f"J = {cfg.J}",
        f"M = {', '.join(str(x) for x in cfg.M)}",
        f"N = {', '.join(str(x) for x in cfg.N)}",
        f"d = {', '.join(str(x) for x in cfg.d)}",
        f"alignment = {align_text}",
    ]
    if seed is not None:
        lines.append(f"seed = {_check_seed(seed)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_int(text: str, lineno: int, key: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigParseError(f"line {lineno}: key '{key}' expects an integer, got {text.strip()!r}") from None


def _parse_int_list(text: str, lineno: int, key: str) -> tuple[int, ...]:
    items = [t for t in text.split(",")]
    if len(items) == 1 and not items[0].strip():
        raise ConfigParseError(f"line {lineno}: key '{key}' expects a comma-separated integer list")
    return tuple(_parse_int(t, lineno, key) for t in items)


def load_config(path):
    """Parse a config file.

    Returns
    -------
    (NetworkConfig, tuple of (k, j) pairs, seed or None)
        The alignment alias ``all`` expands to every cross pair.
    """
    raw: dict[str, tuple[int, str]] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigParseError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in _REQUIRED_KEYS and key != "seed":
            raise ConfigParseError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigParseError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = (lineno, value)
    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise ConfigParseError(f"missing required key {key!r}")

    cfg = NetworkConfig(
        K=_parse_int(raw["K"][1], raw["K"][0], "K"),
        J=_parse_int(raw["J"][1], raw["J"][0], "J"),
        M=_parse_int_list(raw["M"][1], raw["M"][0], "M"),
        N=_parse_int_list(raw["N"][1], raw["N"][0], "N"),
        d=_parse_int_list(raw["d"][1], raw["d"][0], "d"),
    )
    validate_config(cfg)

    lineno, align_text = raw["alignment"]
    align_text = align_text.strip()
    if align_text == "all":
        pairs = alignment_all(cfg)
    elif align_text == "none":
        pairs = ()
    else:
        parsed = []
        for item in align_text.split(";"):
            fields = item.split(",")
            if len(fields) != 2:
                raise ConfigParseError(
                    f"line {lineno}: alignment entry {item.strip()!r} is not of the form 'k,j'"
                )
            parsed.append((_parse_int(fields[0], lineno, "alignment"),
                           _parse_int(fields[1], lineno, "alignment")))
        pairs = canonical_alignment(cfg, parsed)

    seed = None
    if "seed" in raw:
        lineno, seed_text = raw["seed"]
        seed = _parse_int(seed_text, lineno, "seed")
        try:
            seed = _check_seed(seed)
        except ValueError as exc:
            raise ConfigParseError(f"line {lineno}: {exc}") from None
    return cfg, pairs, seed
