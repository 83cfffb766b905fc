/// Element symbols indexed by atomic number; index 0 is the `*` wildcard.
pub(crate) static SYMBOLS: [&str; 119] = [
    "*", "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
    "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge",
    "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd",
    "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn",
    "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

/// Interned symbol for `s`, if it names an element (or `*`).
pub(crate) fn lookup(s: &[u8]) -> Option<&'static str> {
    SYMBOLS.iter().copied().find(|sym| sym.as_bytes() == s)
}

pub(crate) fn atomic_number(symbol: &str) -> u8 {
    SYMBOLS.iter().position(|s| *s == symbol).unwrap_or(0) as u8
}

/// Elements that may be written lowercase (aromatic class).
pub(crate) fn aromatic_allowed(symbol: &str) -> bool {
    matches!(symbol, "B" | "C" | "N" | "O" | "P" | "S" | "Se" | "As" | "Te")
}

/// Elements that may appear without brackets.
pub(crate) fn organic_subset(symbol: &str, aromatic: bool) -> bool {
    if aromatic {
        matches!(symbol, "B" | "C" | "N" | "O" | "P" | "S")
    } else {
        matches!(symbol, "*" | "B" | "C" | "N" | "O" | "P" | "S" | "F" | "Cl" | "Br" | "I")
    }
}
