"""Physical constants and isotope masses, pinned in one place.

CODATA 2018 values. Everything downstream imports from here so that a
constant can never drift between modules.
"""

import math

# elementary charge [C]
E_CHARGE = 1.602176634e-19

# vacuum permittivity [F/m]
EPSILON_0 = 8.8541878128e-12

# reduced Planck constant [J s]
HBAR = 1.054571817e-34

# atomic mass unit [kg]
AMU = 1.66053906660e-27

# Coulomb coupling constant e^2 / (4 pi eps0) [N m^2], for charge number 1
COULOMB_COEFF = E_CHARGE**2 / (4.0 * math.pi * EPSILON_0)

# Isotope masses [amu]. Singly ionized; the missing electron mass is far
# below the accuracy that matters here.
ISOTOPE_MASS_AMU = {
    "Be9": 9.01218,
    "Ca40": 39.9626,
}

# accepted aliases for species names in configs
SPECIES_ALIASES = {
    "be9": "Be9",
    "9be": "Be9",
    "be": "Be9",
    "ca40": "Ca40",
    "40ca": "Ca40",
    "ca": "Ca40",
}


def mass_kg(amu_value):
    """Convert a mass given in atomic mass units to kg."""
    return amu_value * AMU


def resolve_species_name(name):
    """Map a config token like 'ca40' or '9Be' to the canonical key, or None."""
    key = name.strip().lower()
    if key in SPECIES_ALIASES:
        return SPECIES_ALIASES[key]
    return None
