"""CM elliptic curves and their l-adic Galois images: group models, Weierstrass
families, division polynomials, Frobenius sampling and twist classification."""

__version__ = "0.1.0"
