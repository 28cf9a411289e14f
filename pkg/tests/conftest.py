import numpy as np
import pytest

from padic_exit.radial import ball_mass, density_radial

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class GroupModel:
    """The quotient ``B_A / B_{-N}`` as the cyclic group ``Z / p^(A+N)``.

    Cell ``i`` holds the points ``x`` with ``x p^A = i mod p^(A+N)``; every
    cell has Haar measure ``p^-N``.  Integrals of products of radial functions
    become plain cyclic sums, computed by brute force / FFT, which gives an
    oracle for ball convolutions and bridge ball masses that shares no code
    with the circle decompositions in the library.
    """

    def __init__(self, p, A, N):
        self.p, self.A, self.N = p, A, N
        self.size = p ** (A + N)
        self.cell = float(p) ** (-N)
        i = np.arange(self.size)
        tz = np.zeros(self.size, dtype=np.int64)
        x = i.copy()
        live = x != 0
        for _ in range(A + N):
            hit = live & (x % p == 0)
            tz[hit] += 1
            x[hit] //= p
            live = hit
        self.zero = i == 0
        self.radius = np.where(self.zero, 0, A - tz)  # exponent r with |x| = p^r

    def heat(self, params, t):
        """Cell averages of ``rho(t, .)``: exact on every cell except 0, where the average is used."""
        vals = {r: density_radial(params, t, int(r)).value for r in np.unique(self.radius[~self.zero])}
        f = np.array([vals.get(int(r), 0.0) for r in self.radius])
        f[self.zero] = ball_mass(params, t, -self.N).value / self.cell
        return f

    def ball(self, k, center=0):
        d = (np.arange(self.size) - center) % self.size
        r = np.where(d == 0, -10 ** 9, self.radius[d])
        return r <= k

    def conv(self, f, g):
        """``(f * g)(z) = sum_x f(x) g(z - x) * cell``."""
        return np.real(np.fft.ifft(np.fft.fft(f) * np.fft.fft(g))) * self.cell

    def index(self, x):
        """Cell of a PAdic value inside ``B_A``."""
        assert x.is_zero or -x.valuation <= self.A
        if x.is_zero:
            return 0
        return sum(x.digit(k) * self.p ** (k + self.A) for k in range(x.valuation, self.N)) % self.size


@pytest.fixture
def group_model():
    return GroupModel
