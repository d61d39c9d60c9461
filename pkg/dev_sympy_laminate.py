# Throwaway dev script: exact closed-form laminate tensor entries via sympy.
# The laminate chain reduces to 1D two-phase periodic ODEs of the form
#   -(a f' + D)' = r,   f even or odd, <f> = 0,
# solvable piecewise in closed form.  Results are frozen as test oracles.
import sympy as sp

y, t = sp.symbols("y t", real=True)
A = sp.Rational(2)
B = sp.Rational(1, 5)
c = 2 * sp.pi / 5  # interface; material A on [0, c), B on (c, pi]
PI = sp.pi

abar = (A * c + B * (PI - c)) / PI              # arithmetic mean
ahar = PI / (c / A + (PI - c) / B)              # harmonic mean


class PW:
    """Piecewise polynomial on [0, pi] with two pieces split at c."""

    def __init__(self, p1, p2):
        self.p1, self.p2 = sp.expand(p1), sp.expand(p2)

    def __add__(self, o):
        o = as_pw(o); return PW(self.p1 + o.p1, self.p2 + o.p2)

    def __radd__(self, o): return self.__add__(o)

    def __sub__(self, o):
        o = as_pw(o); return PW(self.p1 - o.p1, self.p2 - o.p2)

    def __rsub__(self, o):
        o = as_pw(o); return PW(o.p1 - self.p1, o.p2 - self.p2)

    def __mul__(self, o):
        o = as_pw(o); return PW(self.p1 * o.p1, self.p2 * o.p2)

    def __rmul__(self, o): return self.__mul__(o)

    def diff(self): return PW(sp.diff(self.p1, y), sp.diff(self.p2, y))

    def integrate_from_0(self):
        """Antiderivative vanishing at 0, continuous at c."""
        i1 = sp.integrate(self.p1, (y, 0, y))
        at_c = i1.subs(y, c)
        i2 = at_c + sp.integrate(self.p2, (y, c, y))
        return PW(i1, i2)

    def integral_0_pi(self):
        return sp.integrate(self.p1, (y, 0, c)) + sp.integrate(self.p2, (y, c, PI))

    def at(self, x):
        return self.p1.subs(y, x) if x < c else self.p2.subs(y, x)


def as_pw(o):
    return o if isinstance(o, PW) else PW(sp.sympify(o), sp.sympify(o))


a = PW(A, B)
inv_a = PW(1 / A, 1 / B)


def mean(f: PW):
    """<f> over the full cell for an even integrand."""
    return sp.simplify(f.integral_0_pi() / PI)


def solve_flux(D: PW, r: PW, parity: str):
    """Solve -(a f' + D)' = r with periodicity, zero mean, given parity.

    Flux Phi = a f' + D is continuous, Phi' = -r, and Phi(0) = D(0) for even
    f (f'(0) = 0) while for odd f the constant enforces f(pi) = 0.
    """
    R_int = r.integrate_from_0()
    # Phi = Phi0 - int_0^y r
    if parity == "even":
        Phi0 = D.at(0)
        fprime = (PW(Phi0, Phi0) - R_int - D) * inv_a
        f_raw = fprime.integrate_from_0()
        f0 = -mean(f_raw)
        return f_raw + f0, fprime
    # odd: f(0) = 0; choose Phi0 so that f(pi) = 0
    base = ((PW(0, 0) - R_int - D) * inv_a).integrate_from_0()
    slope = inv_a.integrate_from_0()
    Phi0 = sp.solve(base.at(PI) + sp.Symbol("z") * slope.at(PI) - 0, sp.Symbol("z"))[0]
    fprime = (PW(Phi0, Phi0) - R_int - D) * inv_a
    return base + PW(Phi0, Phi0) * slope - PW(0, 0), fprime


# q~: a q~' = -a + ahar
qt_prime = (PW(ahar, ahar) - a) * inv_a
qt = qt_prime.integrate_from_0()

# P: -(a P')' = -2a + 2abar, even
P, P_prime = solve_flux(PW(0, 0), 2 * abar - 2 * a, "even")

# R: -(a R' - 2 a q~)' = -2 a q~' - 2a + 2 ahar, even
R, R_prime = solve_flux(PW(-2, -2) * a * qt, PW(-2, -2) * a * qt_prime - 2 * a + 2 * ahar, "even")

# s~: -(a s~' - 3 a R)' = 3 a R' - 6 a q~ + 6 ahar q~, odd
st, st_prime = solve_flux(PW(3, 3) * a * R, 3 * a * R_prime - 6 * a * qt + 6 * ahar * qt, "odd")

# w~: -(a w~' - a P)' = a P' - 2 a q~ + 2 abar q~, odd
wt, wt_prime = solve_flux(PW(1, 1) * a * P, a * P_prime - 2 * a * qt + 2 * abar * qt, "odd")

a1 = abar
a2 = ahar
alpha1 = sp.simplify(mean(a * P) / 2)
alpha2 = sp.simplify(mean(a * R) / 2 + mean(a * st_prime) / 6)
beta = sp.simplify((mean(a * R) + mean(a * P) + mean(a * wt_prime)) / 12)

print("a1     =", sp.nsimplify(a1), "=", float(a1))
print("a2     =", sp.nsimplify(a2), "=", float(a2))
print("alpha1 =", sp.simplify(alpha1), "=", float(alpha1))
print("alpha2 =", sp.simplify(alpha2), "=", float(alpha2))
print("beta   =", sp.simplify(beta), "=", float(beta))
print()
print("published converged: a1 0.9200  a2 0.3125  al1 -1.9645  al2 -0.1170  be 0.1599")
print("our FD 240x320:      a1 0.92    a2 0.3125  al1 -1.96470 al2 -0.11711 be 0.15988")
