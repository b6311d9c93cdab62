"""Exact values, the EFX checkers and what the infinitesimal perturbation does to ties."""
from fractions import Fraction

from efxtypes import Allocation, Instance, check_alpha_efx, check_charity, critical_goods, value_of

# one type, two agents, three goods
inst = Instance([[1, 3, 3]], [2])
X = Allocation(inst, [{0}, {1, 2}], set())

print("agent 0 values her own bundle at", value_of(inst, 0, {0}))
print("and the other bundle at", value_of(inst, 0, {1, 2}))

for alpha in (Fraction(1), Fraction(2, 3), Fraction(1, 3)):
    cert = check_alpha_efx(X, alpha)
    print(f"alpha={alpha}: pass={cert.passed}, violations={len(cert.violations)}")

# the first violation explains itself
print(check_alpha_efx(X, Fraction(2, 3)).violations[0])

# ties are broken by the tag sum(2^g): {0, 2} and {1, 3} both sum to 11 here
inst = Instance([[1, 2, 10, 9]], [1])
a, b = value_of(inst, 0, {0, 2}), value_of(inst, 0, {1, 3})
print(a, "<", b, "->", a < b)

# a pool good is critical when it beats half of the holder's bundle
inst = Instance([[4, 3, 1]], [1])
Y = Allocation(inst, [{0}], {1, 2})
print("critical pool goods:", {g: sorted(who) for g, who in critical_goods(Y).items()})
print("charity certificate (pool must not be envied):", check_charity(Y).passed)
