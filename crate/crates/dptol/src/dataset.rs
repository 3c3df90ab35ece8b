//! Bundled relative-potency measurements (percent of reference), 25 values
//! from five manufacturing campaigns, listed campaign by campaign.

pub const POTENCY: [f64; 25] = [
    // campaign 1
    95.661, 102.259, 103.135, 99.827,
    // campaign 2
    98.830, 94.887, 103.362, 94.117,
    // campaign 3
    96.665, 106.234, 103.735, 104.317, 101.807,
    // campaign 4
    98.198, 98.186, 107.872, 99.987, 103.051, 106.445,
    // campaign 5
    95.922, 102.956, 101.596, 96.806, 107.041, 92.589,
];

/// Lower and upper quality specification limits.
pub const SPEC_LIMITS: (f64, f64) = (90.0, 110.0);

/// Process target used to centre base measures.
pub const TARGET: f64 = 100.0;

/// The bundled data file, one value per line.
pub const POTENCY_TXT: &str = include_str!("../data/potency.txt");
