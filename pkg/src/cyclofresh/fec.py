"""Coding chain: outer Reed-Solomon (255,239) over GF(256), block
interleaver, inner rate-1/2 convolutional code (171,155 octal) with
terminated soft/hard Viterbi decoding.

Chain order (encode): RS -> interleave -> convolutional; decode inverts.
The interleaver spans exactly one RS codeword of bits (51 x 40 = 2040).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CodecConfig",
    "Frame",
    "DecodeFailure",
    "rs_encode",
    "rs_decode",
    "conv_encode",
    "viterbi_decode",
    "interleave",
    "deinterleave",
    "encode_frame",
    "decode_frame",
]

GF_PRIM_POLY = 0x11D  # x^8 + x^4 + x^3 + x^2 + 1


class DecodeFailure(Exception):
    """Uncorrectable codeword."""


def _build_tables():
    exp = np.zeros(510, dtype=np.int64)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= GF_PRIM_POLY
    exp[255:510] = exp[:255]
    return exp, log


_GF_EXP, _GF_LOG = _build_tables()


def _gf_mul(a, b):
    if a == 0 or b == 0:
        return 0
    return int(_GF_EXP[_GF_LOG[a] + _GF_LOG[b]])


def _gf_inv(a):
    if a == 0:
        raise ZeroDivisionError("GF(256) inverse of 0")
    return int(_GF_EXP[255 - _GF_LOG[a]])


def _poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] ^= _gf_mul(a, b)
    return out


def _poly_eval(p, x):
    """Horner evaluation; p[0] is the highest-degree coefficient."""
    y = 0
    for c in p:
        y = _gf_mul(y, x) ^ c
    return y


@dataclass(frozen=True)
class CodecConfig:
    """interleave_position: "pre_conv" permutes the RS codeword bits before
    convolutional encoding (the default composition RS -> interleave ->
    conv); "post_conv" adds a channel interleaver over the convolutionally
    coded bits instead, which spreads channel bursts across the Viterbi
    input (the placement burst-noise links need)."""

    rs_n: int = 255
    rs_k: int = 239
    conv_g: tuple = (0o171, 0o155)
    conv_k: int = 7
    interleaver_rows: int = 51
    interleaver_cols: int = 40
    soft_decision: bool = True
    interleave_position: str = "pre_conv"

    def __post_init__(self):
        if (self.rs_n - self.rs_k) % 2:
            raise ValueError("rs_n - rs_k must be even")
        if self.interleave_position not in ("pre_conv", "post_conv"):
            raise ValueError(f"unknown interleave_position {self.interleave_position!r}")
        if self.interleave_position == "pre_conv":
            need = 8 * self.rs_n
        else:
            need = 2 * (8 * self.rs_n + self.conv_k - 1)
        if self.interleaver_rows * self.interleaver_cols != need:
            raise ValueError(
                f"interleaver {self.interleaver_rows}x{self.interleaver_cols} must span "
                f"{need} bits for {self.interleave_position}"
            )

    @property
    def rs_t(self):
        return (self.rs_n - self.rs_k) // 2

    @property
    def flush_bits(self):
        return self.conv_k - 1

    @property
    def info_bits_per_frame(self):
        return 8 * self.rs_k

    @property
    def coded_bits_per_frame(self):
        return 2 * (8 * self.rs_n + self.flush_bits)

    @classmethod
    def with_channel_interleaver(cls, **kwargs):
        """Variant with the interleaver over the coded bits (62 x 66 = 4092)."""
        kwargs.setdefault("interleaver_rows", 62)
        kwargs.setdefault("interleaver_cols", 66)
        return cls(interleave_position="post_conv", **kwargs)


@dataclass(frozen=True)
class Frame:
    info_bits: np.ndarray
    coded_bits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "info_bits", np.asarray(self.info_bits, dtype=np.int64))
        object.__setattr__(self, "coded_bits", np.asarray(self.coded_bits, dtype=np.int64))


def _rs_generator(cfg):
    g = [1]
    for i in range(1, 2 * cfg.rs_t + 1):
        g = _poly_mul(g, [1, int(_GF_EXP[i])])
    return g


_GEN_CACHE = {}


def rs_encode(info, cfg=CodecConfig()):
    """Systematic RS codeword: info symbols followed by 2t parity symbols."""
    info = [int(s) for s in info]
    if len(info) != cfg.rs_k:
        raise ValueError(f"need {cfg.rs_k} info symbols, got {len(info)}")
    if any(not 0 <= s < 256 for s in info):
        raise ValueError("symbols must be in 0..255")
    key = (cfg.rs_n, cfg.rs_k)
    if key not in _GEN_CACHE:
        _GEN_CACHE[key] = _rs_generator(cfg)
    gen = _GEN_CACHE[key]
    npar = 2 * cfg.rs_t
    rem = info + [0] * npar
    for i in range(cfg.rs_k):
        coef = rem[i]
        if coef:
            for j in range(1, len(gen)):
                rem[i + j] ^= _gf_mul(gen[j], coef)
    return np.array(info + rem[cfg.rs_k :], dtype=np.int64)


def rs_decode(recv, cfg=CodecConfig()):
    """Berlekamp-Massey / Chien / Forney decoding.

    Returns (info_symbols, n_corrected); raises DecodeFailure when more than
    t symbols are corrupted (detected via locator inconsistency or the
    post-correction syndrome recheck).
    """
    recv = [int(s) for s in recv]
    if len(recv) != cfg.rs_n:
        raise ValueError(f"need {cfg.rs_n} symbols, got {len(recv)}")
    synd = [_poly_eval(recv, int(_GF_EXP[i])) for i in range(1, 2 * cfg.rs_t + 1)]
    if not any(synd):
        return np.array(recv[: cfg.rs_k], dtype=np.int64), 0

    # Berlekamp-Massey error locator, coefficients low -> high degree
    c = [1] + [0] * (2 * cfg.rs_t)
    b = [1] + [0] * (2 * cfg.rs_t)
    l, m, bb = 0, 1, 1
    for n in range(2 * cfg.rs_t):
        d = synd[n]
        for i in range(1, l + 1):
            d ^= _gf_mul(c[i], synd[n - i])
        if d == 0:
            m += 1
        elif 2 * l <= n:
            t = c[:]
            coef = _gf_mul(d, _gf_inv(bb))
            for i in range(2 * cfg.rs_t + 1 - m):
                c[i + m] ^= _gf_mul(coef, b[i])
            l, b, bb, m = n + 1 - l, t, d, 1
        else:
            coef = _gf_mul(d, _gf_inv(bb))
            for i in range(2 * cfg.rs_t + 1 - m):
                c[i + m] ^= _gf_mul(coef, b[i])
            m += 1
    if l > cfg.rs_t:
        raise DecodeFailure(f"locator degree {l} exceeds correction capability {cfg.rs_t}")

    # Chien search: roots of the locator are alpha^{-pos} for error positions
    positions = []
    for pos in range(cfg.rs_n):
        xinv = int(_GF_EXP[(255 - pos) % 255])
        acc, xp = 0, 1
        for i in range(l + 1):
            if c[i]:
                acc ^= _gf_mul(c[i], xp)
            xp = _gf_mul(xp, xinv)
        if acc == 0:
            positions.append(pos)
    if len(positions) != l:
        raise DecodeFailure(f"locator has {len(positions)} roots, expected {l}")

    # Forney error magnitudes from omega = synd * locator mod x^{2t}
    omega = [0] * (2 * cfg.rs_t)
    for i in range(2 * cfg.rs_t):
        acc = 0
        for j in range(min(i, l) + 1):
            if c[j]:
                acc ^= _gf_mul(c[j], synd[i - j])
        omega[i] = acc
    corrected = recv[:]
    for pos in positions:
        xinv = int(_GF_EXP[(255 - pos) % 255])
        xinv2 = _gf_mul(xinv, xinv)
        denom, xp = 0, 1  # derivative keeps odd-degree coefficients only
        for i in range(1, l + 1, 2):
            denom ^= _gf_mul(c[i], xp)
            xp = _gf_mul(xp, xinv2)
        if denom == 0:
            raise DecodeFailure("Forney denominator vanished")
        num, xp = 0, 1
        for i in range(len(omega)):
            if omega[i]:
                num ^= _gf_mul(omega[i], xp)
            xp = _gf_mul(xp, xinv)
        mag = _gf_mul(num, _gf_inv(denom))
        corrected[cfg.rs_n - 1 - pos] ^= mag  # recv[0] is the highest power
    if any(_poly_eval(corrected, int(_GF_EXP[i])) for i in range(1, 2 * cfg.rs_t + 1)):
        raise DecodeFailure("syndromes nonzero after correction")
    return np.array(corrected[: cfg.rs_k], dtype=np.int64), l


def _conv_tables(cfg):
    k = cfg.conv_k
    nstates = 1 << (k - 1)
    out = np.zeros((2, nstates, 2), dtype=np.int64)
    for b in range(2):
        for s in range(nstates):
            reg = (b << (k - 1)) | s
            for gi, g in enumerate(cfg.conv_g):
                out[b, s, gi] = bin(reg & g).count("1") & 1
    return out


_CONV_CACHE = {}


def _conv_out(cfg):
    key = (cfg.conv_g, cfg.conv_k)
    if key not in _CONV_CACHE:
        _CONV_CACHE[key] = _conv_tables(cfg)
    return _CONV_CACHE[key]


def conv_encode(bits, cfg=CodecConfig()):
    """Rate-1/2 encoding of bits + (K-1) flush zeros; the two generator
    streams are interleaved as A0 B0 A1 B1 ..."""
    out_tab = _conv_out(cfg)
    bits = np.concatenate([np.asarray(bits, dtype=np.int64), np.zeros(cfg.flush_bits, np.int64)])
    coded = np.empty(2 * bits.shape[0], dtype=np.int64)
    state = 0
    for i, b in enumerate(bits):
        coded[2 * i] = out_tab[b, state, 0]
        coded[2 * i + 1] = out_tab[b, state, 1]
        state = (b << (cfg.conv_k - 2)) | (state >> 1)
    return coded


def viterbi_decode(soft, cfg=CodecConfig()):
    """Maximum-likelihood sequence decoding over the terminated trellis.

    ``soft`` holds one value per coded bit under the mapping bit b -> 1 - 2b
    (hard bits enter as +/-1). Branch metrics are squared Euclidean
    distances, reduced to the equivalent correlation form. Returns the info
    bits with the flush tail stripped.
    """
    out_tab = _conv_out(cfg)
    soft = np.asarray(soft, dtype=float)
    if soft.shape[0] % 2:
        raise ValueError("soft input length must be even")
    nsteps = soft.shape[0] // 2
    if nsteps <= cfg.flush_bits:
        raise ValueError("input shorter than the flush tail")
    nstates = 1 << (cfg.conv_k - 1)
    half = nstates >> 1
    sign = 2.0 * out_tab - 1.0  # minimize sum soft * sign
    metrics = np.full(nstates, np.inf)
    metrics[0] = 0.0
    back = np.zeros((nsteps, nstates), dtype=np.uint8)
    for step in range(nsteps):
        sa, sb = soft[2 * step], soft[2 * step + 1]
        nm = np.empty(nstates)
        for b in (0, 1):
            # next state ns = (b << (k-2)) | (s >> 1): predecessors of ns
            # are s = 2*(ns mod half) + r, r in {0, 1}
            cand = (metrics + sa * sign[b, :, 0] + sb * sign[b, :, 1]).reshape(half, 2)
            pick = np.argmin(cand, axis=1)
            nm[b * half : (b + 1) * half] = cand[np.arange(half), pick]
            back[step, b * half : (b + 1) * half] = pick
        metrics = nm
    state = 0  # terminated trellis ends in the zero state
    bits = np.empty(nsteps, dtype=np.int64)
    for step in range(nsteps - 1, -1, -1):
        bits[step] = state >> (cfg.conv_k - 2)
        state = 2 * (state & (half - 1)) + back[step, state]
    return bits[: nsteps - cfg.flush_bits]


def interleave(bits, cfg=CodecConfig()):
    """Row-write column-read block permutation."""
    bits = np.asarray(bits)
    n = cfg.interleaver_rows * cfg.interleaver_cols
    if bits.shape[0] != n:
        raise ValueError(f"interleaver expects {n} bits, got {bits.shape[0]}")
    return bits.reshape(cfg.interleaver_rows, cfg.interleaver_cols).T.ravel()


def deinterleave(bits, cfg=CodecConfig()):
    bits = np.asarray(bits)
    n = cfg.interleaver_rows * cfg.interleaver_cols
    if bits.shape[0] != n:
        raise ValueError(f"interleaver expects {n} bits, got {bits.shape[0]}")
    return bits.reshape(cfg.interleaver_cols, cfg.interleaver_rows).T.ravel()


def bytes_to_bits(syms):
    syms = np.asarray(syms, dtype=np.int64)
    return ((syms[:, None] >> np.arange(7, -1, -1)) & 1).ravel()


def bits_to_bytes(bits):
    bits = np.asarray(bits, dtype=np.int64).reshape(-1, 8)
    return (bits << np.arange(7, -1, -1)).sum(axis=1)


def encode_frame(info_bits, cfg=CodecConfig()):
    """info bits (8*rs_k) -> RS -> interleave -> convolutional
    (or RS -> conv -> channel interleave for post_conv configs)."""
    info_bits = np.asarray(info_bits, dtype=np.int64)
    if info_bits.shape[0] != cfg.info_bits_per_frame:
        raise ValueError(f"frame takes {cfg.info_bits_per_frame} info bits")
    cw_bits = bytes_to_bits(rs_encode(bits_to_bytes(info_bits), cfg))
    if cfg.interleave_position == "pre_conv":
        coded = conv_encode(interleave(cw_bits, cfg), cfg)
    else:
        coded = interleave(conv_encode(cw_bits, cfg), cfg)
    return Frame(info_bits=info_bits, coded_bits=coded)


def info_estimate_from_conv(conv_bits, cfg=CodecConfig()):
    """Best-effort info bits when RS fails: the uncorrected systematic part."""
    if cfg.interleave_position == "pre_conv":
        rs_bits = deinterleave(conv_bits, cfg)
    else:
        rs_bits = np.asarray(conv_bits)
    return rs_bits[: cfg.info_bits_per_frame]


def decode_frame(soft_coded, cfg=CodecConfig()):
    """Inverse chain. Returns (info_bits or None, rs_ok, conv_bits) where
    conv_bits is the post-Viterbi bit stream (pre-RS), for BER accounting.
    """
    soft_coded = np.asarray(soft_coded, dtype=float)
    if cfg.interleave_position == "post_conv":
        soft_coded = deinterleave(soft_coded, cfg)
    conv_bits = viterbi_decode(soft_coded, cfg)
    if cfg.interleave_position == "pre_conv":
        rs_bits = deinterleave(conv_bits, cfg)
    else:
        rs_bits = conv_bits
    recv = bits_to_bytes(rs_bits)
    try:
        info_syms, _ = rs_decode(recv, cfg)
    except DecodeFailure:
        return None, False, conv_bits
    return bytes_to_bits(info_syms), True, conv_bits
