"""Hand-built audit fixture: 8 users, 15 items, 3 suppliers, lists of length 3."""

PROFILES = {
    "u1": {"i01": 5, "i02": 4, "i03": 3, "i05": 2, "i10": 1},
    "u2": {"i01": 4, "i02": 5, "i04": 3, "i06": 4},
    "u3": {"i01": 3, "i03": 4, "i07": 2, "i11": 5, "i12": 1},
    "u4": {"i01": 5, "i02": 2, "i05": 3, "i08": 4, "i13": 2, "i14": 3},
    "u5": {"i02": 1, "i03": 5, "i06": 2, "i09": 4},
    "u6": {"i01": 2, "i04": 5, "i10": 3, "i15": 4},
    "u7": {"i05": 5, "i07": 4, "i11": 3, "i12": 2, "i13": 1},
    "u8": {"i01": 4, "i02": 3, "i03": 2, "i06": 5, "i08": 1, "i09": 3},
}

RECS = {
    "u1": ["i04", "i06", "i11"],
    "u2": ["i03", "i05", "i15"],
    "u3": ["i02", "i04", "i09"],
    "u4": ["i03", "i10", "i12"],
    "u5": ["i01", "i11", "i14"],
    "u6": ["i02", "i03", "i07"],
    "u7": ["i01", "i02", "i03"],
    "u8": ["i13", "i14", "i15"],
}

SUPPLIERS = {f"i{k:02d}": ("sA" if k <= 4 else "sB" if k <= 9 else "sC") for k in range(1, 16)}

RATINGS = [(u, i, r) for u, p in PROFILES.items() for i, r in p.items()]
N = 3
