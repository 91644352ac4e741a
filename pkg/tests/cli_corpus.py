"""The golden CLI runs: (golden file stem, argv).  Paths are relative to tests/."""

RUNS = [
    ("homology_z2_z", ["homology", "fixtures/z2.json", "--coeff", "Z", "--max-degree", "4"]),
    ("homology_z2_sign_q", ["homology", "fixtures/z2.json", "--coeff", "Q", "--sheaf", "sign", "--max-degree", "3"]),
    ("homology_s3_action_z", ["homology", "fixtures/s3_action.json", "--coeff", "Z", "--max-degree", "3"]),
    ("homology_loops_f2", ["homology", "fixtures/s3_action.json", "--groupoid", "LX", "--coeff", "F2", "--max-degree", "2"]),
    ("homology_fibered_q", ["homology", "fixtures/fibered.json", "--coeff", "Q", "--max-degree", "3"]),
    ("homology_explicit_z", ["homology", "fixtures/explicit.json", "--coeff", "Z", "--max-degree", "3"]),
    ("cohomology_z2_z", ["cohomology", "fixtures/z2.json", "--coeff", "Z", "--max-degree", "4"]),
    ("leray_z4_f2", ["leray", "fixtures/z4.json", "--hom", "mod2", "--coeff", "F2", "--max-degree", "3"]),
    ("morita_pair3", ["morita", "fixtures/pair3.json", "--hom", "incl"]),
    ("morita_fibered_p2", ["morita", "fixtures/fibered.json", "--hom", "F.p2"]),
    ("morita_action_projection", ["morita", "fixtures/s3_action.json", "--hom", "X.projection"]),
    ("cyclic_pair2", ["cyclic", "fixtures/pair2.json", "--coeff", "Q", "--max-degree", "4", "--compare-loops"]),
    ("cyclic_s3_action", ["cyclic", "fixtures/s3_action.json", "--coeff", "Q", "--max-degree", "3",
                          "--localize", "all-orbits", "--compare-loops"]),
    ("cyclic_z2_units_f2", ["cyclic", "fixtures/z2.json", "--coeff", "F2", "--max-degree", "2", "--localize", "units"]),
    ("export_explicit", ["export", "fixtures/explicit.json"]),
]
