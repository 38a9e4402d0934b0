"""Which nearest-neighbour quadratic couplings conserve energy?

The six coefficients C_{-1,-1}, C_{-1,0}, C_{-1,+1}, C_{0,0}, C_{0,+1},
C_{+1,+1} define a shell model. Exact rational arithmetic decides whether the
energy is conserved for every state and, if so, reads off (alpha, beta). When
it is not, a small integer state with nonzero dE/dt is returned as witness.
"""

from fractions import Fraction

from dyadic import GenericModelCoefficients, classify_conservative_model

cases = {
    "KP": (1, 0, 0, 0, -2, 0),
    "Obukhov": (0, 1, 0, 0, 0, -2),
    "mixed 1/3, 2/7": GenericModelCoefficients.from_kpo(Fraction(1, 3), Fraction(2, 7)).C,
    "KP with C_00 bumped": (1, 0, 0, Fraction(1, 1000), -2, 0),
    "KP with C_0+ off by 1/500": (1, 0, 0, 0, Fraction(-998, 500), 0),
}
for name, C in cases.items():
    res = classify_conservative_model(GenericModelCoefficients(tuple(C)))
    if res.conservative:
        print(f"{name:28s} conservative: alpha={res.alpha}, beta={res.beta}")
    else:
        print(f"{name:28s} not conservative: state {res.witness} gives dE/dt = {res.energy_rate}")
