"""MIMO system model: constellations, Rayleigh channels, transmission, and
the complex -> real -> spin encodings that turn detection into an Ising
problem.

Conventions fixed here (everything downstream depends on them):

* Constellations are unnormalized integer lattices. Real-axis levels are
  ``{-sqrt(M)+1, ..., sqrt(M)-1}`` for square M-QAM and ``{-1, +1}`` for
  BPSK; the average symbol energy ``es`` follows from that.
* Realification: ``h_real = [[Re -Im], [Im Re]]`` for square constellations.
  BPSK transmits no imaginary part, so its unknown columns are dropped and
  ``h_real = [[Re], [Im]]`` is 2N_r x N_t.
* Spin layout: real symbol j is carried by spins ``s[j + (i-1)*n]`` for
  i = 1..r_b, most significant first, so that
  ``x_j = sum_i 2^(r_b-i) * (s + 1) - (2^r_b - 1)``.
* Bit mapping is Gray-coded per real axis, bit 0 -> level -1 for BPSK.
* SNR definition: ``snr = N_t * es / sigma^2`` per receive antenna, with
  unit-variance channel entries; sigma^2 is the total complex noise
  variance per receive antenna.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EncodingError, UnsupportedGeometryError, UnsupportedModulationError
from .numerics import SeededRng

SUPPORTED_ORDERS = (2, 4, 16, 64)


@dataclass(frozen=True)
class Constellation:
    """M-QAM alphabet together with its real-axis lattice."""

    m: int
    omega_r: tuple[int, ...]
    r_b: int
    es: float
    rectangular: bool

    @property
    def bits_per_symbol(self) -> int:
        return int(round(math.log2(self.m)))

    @property
    def max_level(self) -> int:
        return self.omega_r[-1]

    def points(self) -> np.ndarray:
        """Full complex alphabet, ordered by (real, imag) for determinism."""
        if self.rectangular:
            return np.array(self.omega_r, dtype=complex)
        re, im = np.meshgrid(self.omega_r, self.omega_r, indexing="ij")
        return (re + 1j * im).ravel()


def make_constellation(m: int) -> Constellation:
    """Constellation for order m in {2, 4, 16, 64}; 2 means BPSK."""
    if m not in SUPPORTED_ORDERS:
        raise UnsupportedModulationError(f"unsupported constellation order {m}")
    if m == 2:
        return Constellation(m=2, omega_r=(-1, 1), r_b=1, es=1.0, rectangular=True)
    side = int(round(math.sqrt(m)))
    levels = tuple(range(-side + 1, side, 2))
    r_b = int(math.ceil(math.log2(side)))
    axis_energy = float(np.mean(np.square(levels)))
    return Constellation(m=m, omega_r=levels, r_b=r_b, es=2.0 * axis_energy, rectangular=False)


@dataclass(frozen=True)
class ChannelInstance:
    """Complex channel matrix plus its real-valued expansion."""

    h: np.ndarray
    h_real: np.ndarray

    @property
    def n_r(self) -> int:
        return self.h.shape[0]

    @property
    def n_t(self) -> int:
        return self.h.shape[1]

    @classmethod
    def from_matrix(cls, h: np.ndarray, constellation: Constellation) -> "ChannelInstance":
        h = np.asarray(h, dtype=complex)
        return cls(h=h, h_real=realify_channel(h, constellation))


def realify_channel(h: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Real expansion of a complex channel; BPSK drops the imaginary columns."""
    re, im = h.real, h.imag
    if constellation.rectangular:
        return np.vstack([re, im])
    return np.block([[re, -im], [im, re]])


def realify_observation(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    return np.concatenate([y.real, y.imag])


def realify_symbols(x: np.ndarray, constellation: Constellation) -> np.ndarray:
    x = np.asarray(x)
    if constellation.rectangular:
        return x.real.astype(float)
    return np.concatenate([x.real, x.imag])


def complexify_symbols(x_real: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Inverse of realify_symbols (vector or batch of row vectors)."""
    x_real = np.asarray(x_real, dtype=float)
    if constellation.rectangular:
        return x_real.astype(complex)
    n = x_real.shape[-1] // 2
    return x_real[..., :n] + 1j * x_real[..., n:]


def generate_channel(
    rng: SeededRng, n_t: int, n_r: int, constellation: Constellation
) -> ChannelInstance:
    """I.i.d. circularly-symmetric unit-variance Rayleigh channel."""
    if n_t < 1:
        raise UnsupportedGeometryError("n_t must be >= 1")
    if n_r < n_t:
        raise UnsupportedGeometryError(
            f"underdetermined geometry n_r={n_r} < n_t={n_t} is out of scope"
        )
    g = rng.generator()
    parts = g.standard_normal((2, n_r, n_t))
    h = (parts[0] + 1j * parts[1]) / math.sqrt(2.0)
    return ChannelInstance.from_matrix(h, constellation)


@dataclass(frozen=True)
class TransmitFrame:
    """One transmit vector and the payload bits it carries."""

    bits: np.ndarray
    symbols: np.ndarray


def noise_variance(constellation: Constellation, n_t: int, snr_db: float) -> float:
    """Total complex noise variance per receive antenna at the given SNR."""
    if math.isinf(snr_db):
        return 0.0
    return n_t * constellation.es / (10.0 ** (snr_db / 10.0))


def transmit(
    channel: ChannelInstance,
    frame: TransmitFrame,
    constellation: Constellation,
    snr_db: float,
    rng: SeededRng,
) -> np.ndarray:
    """y = H x + n with AWGN sized by the SNR convention above.

    snr_db = +inf transmits noiselessly (and draws nothing from rng).
    """
    x = np.asarray(frame.symbols)
    if x.shape[0] != channel.n_t:
        raise EncodingError(f"frame has {x.shape[0]} symbols, channel expects {channel.n_t}")
    y = channel.h @ x
    if math.isinf(snr_db):
        return y
    sigma2 = noise_variance(constellation, channel.n_t, snr_db)
    parts = rng.generator().standard_normal((2, channel.n_r))
    return y + math.sqrt(sigma2 / 2.0) * (parts[0] + 1j * parts[1])


def spins_to_real_symbols(
    s: np.ndarray, constellation: Constellation, n: int
) -> np.ndarray:
    """Decode a spin vector into n real lattice symbols.

    Symbol j reads its r_b spins at positions j, j+n, ..., j+(r_b-1)n, most
    significant first.
    """
    s = np.asarray(s)
    r_b = constellation.r_b
    if s.shape[-1] != n * r_b:
        raise EncodingError(f"spin vector length {s.shape[-1]} != n*r_b = {n * r_b}")
    blocks = s.reshape(*s.shape[:-1], r_b, n)
    weights = 2.0 ** np.arange(r_b - 1, -1, -1)
    x = ((blocks + 1) * weights[..., :, np.newaxis]).sum(axis=-2)
    return x - (2**r_b - 1)


def real_symbols_to_spins(x: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Inverse of spins_to_real_symbols; entries must lie on omega_r."""
    x = np.asarray(x, dtype=float)
    r_b = constellation.r_b
    idx = (x + constellation.max_level) / 2.0
    idx_int = np.rint(idx).astype(int)
    on_lattice = (np.abs(idx - idx_int) < 1e-9) & (idx_int >= 0) & (idx_int < 2**r_b)
    if not np.all(on_lattice):
        raise EncodingError("input contains off-lattice entries; slice first")
    n = x.shape[0]
    s = np.empty(n * r_b, dtype=np.int8)
    for i in range(r_b):
        bit = (idx_int >> (r_b - 1 - i)) & 1
        s[i * n : (i + 1) * n] = 2 * bit - 1
    return s


def transform_matrix(constellation: Constellation, n: int) -> np.ndarray:
    """Weight matrix T with x = T s for the spin layout above."""
    r_b = constellation.r_b
    eye = np.eye(n)
    return np.hstack([2.0 ** (r_b - 1 - i) * eye for i in range(r_b)])


def slice_to_constellation(x: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Nearest alphabet point per entry; ties go to the smaller coordinate."""
    x = np.asarray(x, dtype=complex)
    re = _slice_axis(x.real, constellation.omega_r)
    if constellation.rectangular:
        return re.astype(complex)
    im = _slice_axis(x.imag, constellation.omega_r)
    return re + 1j * im


def _slice_axis(v: np.ndarray, levels: tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(levels, dtype=float)
    mids = (arr[:-1] + arr[1:]) / 2.0
    idx = np.searchsorted(mids, v, side="left")
    return arr[idx]


def _gray(i: np.ndarray) -> np.ndarray:
    return i ^ (i >> 1)


def _gray_inverse(g: np.ndarray) -> np.ndarray:
    # codes here are at most r_b <= 3 bits; folding to 8 covers them all
    i = np.asarray(g).copy()
    for shift in (1, 2, 4):
        i = i ^ (i >> shift)
    return i


def _axis_bits_to_levels(bits: np.ndarray, constellation: Constellation) -> np.ndarray:
    """bits shape (..., r_b), MSB first -> lattice levels via Gray map."""
    r_b = constellation.r_b
    weights = 1 << np.arange(r_b - 1, -1, -1)
    code = (bits * weights).sum(axis=-1)
    idx = _gray_inverse(code)
    return np.asarray(constellation.omega_r)[idx]


def _levels_to_axis_bits(levels: np.ndarray, constellation: Constellation) -> np.ndarray:
    r_b = constellation.r_b
    idx = ((np.asarray(levels) + constellation.max_level) // 2).astype(int)
    code = _gray(idx)
    shifts = np.arange(r_b - 1, -1, -1)
    return ((code[..., np.newaxis] >> shifts) & 1).astype(np.uint8)


def bits_to_frame(bits: np.ndarray, constellation: Constellation, n_t: int) -> TransmitFrame:
    """Map a payload bitstream onto n_t constellation symbols (Gray per axis)."""
    bits = np.asarray(bits, dtype=np.uint8)
    bps = constellation.bits_per_symbol
    if bits.shape[0] != n_t * bps:
        raise EncodingError(f"need {n_t * bps} bits for {n_t} symbols, got {bits.shape[0]}")
    per_user = bits.reshape(n_t, bps)
    r_b = constellation.r_b
    re = _axis_bits_to_levels(per_user[:, :r_b], constellation)
    if constellation.rectangular:
        symbols = re.astype(complex)
    else:
        im = _axis_bits_to_levels(per_user[:, r_b:], constellation)
        symbols = re + 1j * im
    return TransmitFrame(bits=bits, symbols=symbols)


def frame_to_bits(symbols: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Inverse of bits_to_frame for symbols already on the alphabet."""
    symbols = np.asarray(symbols)
    re_bits = _levels_to_axis_bits(np.rint(symbols.real).astype(int), constellation)
    if constellation.rectangular:
        return re_bits.reshape(-1)
    im_bits = _levels_to_axis_bits(np.rint(symbols.imag).astype(int), constellation)
    return np.concatenate([re_bits, im_bits], axis=-1).reshape(-1)
