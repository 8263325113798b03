"""Classical modular polynomial coefficient tables for ell in {2, 3, 5}.

Entries are {(i, j): c} for i >= j with Phi_ell symmetric in X, Y; the
degree in each variable is ell + 1.  The tables are validated in the test
suite against an independent Velu-adjacency oracle: for random
supersingular (curve, kernel) pairs, the codomain j-invariant of the Velu
isogeny must be a root of Phi_ell(j(E), Y).
"""

PHI = {
    2: {
        (3, 0): 1,
        (2, 2): -1,
        (2, 1): 1488,
        (2, 0): -162000,
        (1, 1): 40773375,
        (1, 0): 8748000000,
        (0, 0): -157464000000000,
    },
    3: {
        (4, 0): 1,
        (3, 3): -1,
        (3, 2): 2232,
        (3, 1): -1069956,
        (3, 0): 36864000,
        (2, 2): 2587918086,
        (2, 1): 8900222976000,
        (2, 0): 452984832000000,
        (1, 1): -770845966336000000,
        (1, 0): 1855425871872000000000,
        (0, 0): 0,
    },
    5: {
        (6, 0): 1,
        (5, 5): -1,
        (5, 4): 3720,
        (5, 3): -4550940,
        (5, 2): 2028551200,
        (5, 1): -246683410950,
        (5, 0): 1963211489280,
        (4, 4): 1665999364600,
        (4, 3): 107878928185336800,
        (4, 2): 383083609779811215375,
        (4, 1): 128541798906828816384000,
        (4, 0): 1284733132841424456253440,
        (3, 3): -441206965512914835246100,
        (3, 2): 26898488858380731577417728000,
        (3, 1): -192457934618928299655108231168000,
        (3, 0): 280244777828439527804321565297868800,
        (2, 2): 5110941777552418083110765199360000,
        (2, 1): 36554736583949629295706472332656640000,
        (2, 0): 6692500042627997708487149415015068467200,
        (1, 1): -264073457076620596259715790247978782949376,
        (1, 0): 53274330803424425450420160273356509151232000,
        (0, 0): 141359947154721358697753474691071362751004672000,
    },
}
