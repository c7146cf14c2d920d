"""Feed-forward convolutional coding with hard-decision Viterbi decoding.

Industry-standard constraint-length-7 codes: rate 1/2 uses generators
(133, 171) octal, rate 1/3 adds 165, and rate 2/3 punctures the rate-1/2
code with the pattern [[1, 1], [1, 0]]. Codewords are zero-tail terminated,
so every encode/decode works on a closed trellis.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import EncodingError

_RATES = {
    Fraction(1, 2): ((0o133, 0o171), None),
    Fraction(1, 3): ((0o133, 0o171, 0o165), None),
    Fraction(2, 3): ((0o133, 0o171), ((1, 1), (1, 0))),
}


@dataclass(frozen=True)
class ConvCode:
    rate: Fraction
    constraint_length: int
    generator_polynomials: tuple[int, ...]
    puncture_pattern: tuple[tuple[int, ...], ...] | None = None

    @property
    def n_streams(self) -> int:
        return len(self.generator_polynomials)

    @property
    def tail_bits(self) -> int:
        return self.constraint_length - 1

    def _taps(self) -> np.ndarray:
        k = self.constraint_length
        return np.array(
            [[(g >> (k - 1 - i)) & 1 for i in range(k)] for g in self.generator_polynomials],
            dtype=np.uint8,
        )


def conv_code(rate: str | Fraction) -> ConvCode:
    """The standard code for rate '1/3', '1/2' or '2/3'."""
    fr = Fraction(rate)
    if fr not in _RATES:
        raise EncodingError(f"unsupported code rate {rate}")
    polys, pattern = _RATES[fr]
    return ConvCode(rate=fr, constraint_length=7, generator_polynomials=polys, puncture_pattern=pattern)


def _keep_mask(code: ConvCode, steps: int) -> np.ndarray:
    """Boolean keep-mask over the (steps x n_streams) raw output grid."""
    n = code.n_streams
    if code.puncture_pattern is None:
        return np.ones(steps * n, dtype=bool)
    pattern = np.array(code.puncture_pattern, dtype=bool)  # (n, period)
    period = pattern.shape[1]
    t = np.arange(steps)
    return pattern[:, t % period].T.reshape(-1)


def encode(bits: np.ndarray, code: ConvCode) -> np.ndarray:
    """Terminated (zero-tailed) encoding, punctured per the code's pattern."""
    bits = np.asarray(bits, dtype=np.uint8)
    padded = np.concatenate([bits, np.zeros(code.tail_bits, dtype=np.uint8)])
    steps = padded.shape[0]
    taps = code._taps()
    raw = np.empty((steps, code.n_streams), dtype=np.uint8)
    for j in range(code.n_streams):
        raw[:, j] = np.convolve(padded, taps[j])[:steps] % 2
    return raw.reshape(-1)[_keep_mask(code, steps)]


def _trellis_steps(code: ConvCode, coded_len: int) -> int:
    n = code.n_streams
    if code.puncture_pattern is None:
        if coded_len % n:
            raise EncodingError("coded length is not a multiple of the stream count")
        return coded_len // n
    pattern = np.array(code.puncture_pattern)
    period = pattern.shape[1]
    kept_per_period = int(pattern.sum())
    full, rem = divmod(coded_len, kept_per_period)
    # a trailing partial period must match a prefix of the pattern columns
    prefix = np.cumsum(np.concatenate([[0], pattern.sum(axis=0)]))
    matches = np.nonzero(prefix == rem)[0]
    if len(matches) == 0:
        raise EncodingError("coded length does not align with the puncture pattern")
    return full * period + int(matches[0])


def _output_table(code: ConvCode) -> np.ndarray:
    """outbits[state, input] -> the n output bits, state = previous K-1 inputs
    (most recent in the high bit)."""
    k = code.constraint_length
    n_states = 1 << (k - 1)
    taps = code._taps()
    states = np.arange(n_states)
    table = np.empty((n_states, 2, code.n_streams), dtype=np.uint8)
    for b in (0, 1):
        word = (b << (k - 1)) | states  # (current bit, register)
        word_bits = ((word[:, np.newaxis] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)
        table[:, b, :] = (word_bits @ taps.T) % 2
    return table


def viterbi_decode(bits: np.ndarray, code: ConvCode) -> np.ndarray:
    """Maximum-likelihood hard decoding over the terminated trellis.

    Punctured positions count as erasures; metric ties prefer the smaller
    predecessor state. Returns the info bits (tail removed).
    """
    bits = np.asarray(bits, dtype=np.uint8)
    steps = _trellis_steps(code, bits.shape[0])
    if steps < code.tail_bits:
        raise EncodingError("codeword shorter than the termination tail")
    n = code.n_streams
    mask = _keep_mask(code, steps)
    rx = np.zeros(steps * n, dtype=np.uint8)
    rx[mask] = bits
    rx = rx.reshape(steps, n)
    weight = mask.reshape(steps, n).astype(np.uint8)

    k = code.constraint_length
    n_states = 1 << (k - 1)
    outbits = _output_table(code)
    ns = np.arange(n_states)
    pred0 = 2 * (ns & (n_states // 2 - 1))
    pred1 = pred0 + 1
    b_in = ns >> (k - 2)

    pm = np.full(n_states, np.inf)
    pm[0] = 0.0
    choices = np.empty((steps, n_states), dtype=np.uint8)
    for t in range(steps):
        # distance of every (state, input) branch to the received n-tuple
        diff = (outbits != rx[t]) & weight[t].astype(bool)
        dist = diff.sum(axis=2)
        cand0 = pm[pred0] + dist[pred0, b_in]
        cand1 = pm[pred1] + dist[pred1, b_in]
        take1 = cand1 < cand0
        choices[t] = take1
        pm = np.where(take1, cand1, cand0)

    cur = 0  # terminated codeword ends in the all-zero state
    decoded = np.empty(steps, dtype=np.uint8)
    for t in range(steps - 1, -1, -1):
        decoded[t] = cur >> (k - 2)
        cur = pred0[cur] + choices[t, cur]
    return decoded[: steps - code.tail_bits]
