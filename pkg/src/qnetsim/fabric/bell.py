"""Bell-index algebra.

A Bell index is two bits (p, q) encoded as ``2*p + q``, naming the state
``(I (x) X^q Z^p) |phi+>``:

    0  phi+      1  psi+      2  phi-      3  psi-

Composing two entangled pairs by measuring their middle qubits in the Bell
basis yields a pair whose index is the XOR of the two input indices and the
measurement outcome. The test suite verifies this against an exhaustive
4-qubit state-vector computation before anything else trusts it.
"""

PHI_PLUS = 0
PSI_PLUS = 1
PHI_MINUS = 2
PSI_MINUS = 3


def compose_bell(b1: int, b2: int, m: int) -> int:
    """Bell index of the stitched pair given input pair indices and outcome m."""
    return (b1 ^ b2 ^ m) & 3
