"""Supersingular endomorphism rings from inseparable reflections.

Library + CLI for computing inseparable endomorphisms of supersingular
elliptic curves over F_{p^2}, assembling Bass suborders and the full
endomorphism ring as an explicit maximal quaternion order, and running
the generation-frequency experiments at desk scale.
"""

__version__ = "0.1.0"
