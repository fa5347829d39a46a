"""Frozen calibration constants.

Each constant is the maximum of a fixed, seeded battery (see
:mod:`afrac.verify`); tests recompute the batteries and fail on a regression
beyond 1e-3 relative.  The battery maxima are reported by ``afrac verify-lemmas`` in its JSON summary.
"""

S_GRID = (0.1, 0.25, 0.5, 0.75, 0.9)

# at2_battery(s, 200, seed=0): max of integral * R^{s+alpha}
AT2 = {
    0.1: 4.137706245756704,
    0.25: 2.667310586640022,
    0.5: 2.230411324356286,
    0.75: 1.874257722805308,
    0.9: 1.6927115504846344,
}

# plane integrals on stadium(1,1) at s = 0.25 (bis_ratios): max ratio per mode
BIS = {
    "AT1bis": 1.921381674261135,
    "AT2simple_bis": 10.121067261622809,
    "AT2bis": 6.530582258814339,
    "dist_bis": 22.747180118407165,
}

# cutoff estimate on ball(0,0,4) with R = 1.5 (2 trials, 10 probes, seed 0)
W1_R = 1.5
W1 = {0.25: 0.30690520293477624, 0.5: 0.3042045265153597}

# [L v]_{C^0.4(B_1)} / [v]_{C^0.9} over loss_2s_family at s = 0.25 (h_L = 1/16, h_v = 1/32)
LOSS_2S = 2.0099042749294873

# band_volume / (mu * boundary_area) over BAND_CASES
BAND = 1.00955163540716

# annulus_boundary_area(counterexample, R) / R for R in 0.5 .. 4
ANNULUS = 34.894494911583394

# level-set Lipschitz probe of the quadratic graph x^2/2
LEVEL_SET_T = 0.05
LEVEL_SET_K = 1.0308632582970483

# max norm ratio ||u||_{0.3}/||u||_{0.9}, sigma = -0.25, over the 20-function family at h = 1/32
NORMS = 0.9898633604172534
