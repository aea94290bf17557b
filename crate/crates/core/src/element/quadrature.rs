use super::AreaCoords;
use crate::error::{Error, Result};

/// Symmetric triangle rule. Weights sum to one; a physical integral is
/// `area * sum(w_q * f(x_q))`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub degree: usize,
    pub points: Vec<(AreaCoords, f64)>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(AreaCoords, f64)> {
        self.points.iter()
    }
}

enum Orbit {
    Centroid(f64),
    /// weight, a: the three permutations of (a, b, b)
    S21(f64, f64),
    /// weight, a, b: the six permutations of (a, b, 1 - a - b)
    S111(f64, f64, f64),
}

// Dunavant rules, orbit parameters refined to double precision against the
// monomial moment equations.
const DEG2: &[Orbit] = &[Orbit::S21(1.0 / 3.0, 2.0 / 3.0)];
const DEG4: &[Orbit] = &[
    Orbit::S21(0.223_381_589_678_011_47, 0.108_103_018_168_070_23),
    Orbit::S21(0.109_951_743_655_321_87, 0.816_847_572_980_458_51),
];
const DEG5: &[Orbit] = &[
    Orbit::Centroid(0.225),
    Orbit::S21(0.132_394_152_788_506_18, 0.059_715_871_789_769_820),
    Orbit::S21(0.125_939_180_544_827_15, 0.797_426_985_353_087_32),
];
const DEG6: &[Orbit] = &[
    Orbit::S21(0.116_786_275_726_379_37, 0.501_426_509_658_179_16),
    Orbit::S21(0.050_844_906_370_206_817, 0.873_821_971_016_995_54),
    Orbit::S111(0.082_851_075_618_373_575, 0.053_145_049_844_816_947, 0.310_352_451_033_784_41),
];
const DEG8: &[Orbit] = &[
    Orbit::Centroid(0.144_315_607_677_787_17),
    Orbit::S21(0.095_091_634_267_284_625, 0.081_414_823_414_553_688),
    Orbit::S21(0.103_217_370_534_718_25, 0.658_861_384_496_479_59),
    Orbit::S21(0.032_458_497_623_198_080, 0.898_905_543_365_938_05),
    Orbit::S111(0.027_230_314_174_434_994, 0.008_394_777_409_957_605_3, 0.263_112_829_634_638_11),
];
const DEG10: &[Orbit] = &[
    Orbit::Centroid(0.090_817_990_382_753_580),
    Orbit::S21(0.036_725_957_756_466_705, 0.028_844_733_232_685_245),
    Orbit::S21(0.045_321_059_435_527_935, 0.781_036_849_029_925_89),
    Orbit::S111(0.072_757_916_845_420_109, 0.141_707_219_414_879_95, 0.307_939_838_764_120_95),
    Orbit::S111(0.028_327_242_531_057_485, 0.025_003_534_762_686_386, 0.246_672_560_639_902_69),
    Orbit::S111(0.009_421_666_963_732_823_5, 0.009_540_815_400_299_457_6, 0.066_803_251_012_200_266),
];

/// Lowest-order tabulated symmetric rule that integrates every polynomial of
/// total degree `degree` exactly. Degrees above 10 are not tabulated.
pub fn triangle_quadrature(degree: usize) -> Result<QuadRule> {
    let (exact, orbits): (usize, &[Orbit]) = match degree {
        0 | 1 => (1, &[Orbit::Centroid(1.0)]),
        2 => (2, DEG2),
        3 | 4 => (4, DEG4),
        5 => (5, DEG5),
        6 => (6, DEG6),
        7 | 8 => (8, DEG8),
        9 | 10 => (10, DEG10),
        d => return Err(Error::invalid(format!("no triangle rule of degree {d} (max 10)"))),
    };
    let mut points = Vec::new();
    for orbit in orbits {
        match *orbit {
            Orbit::Centroid(w) => points.push((AreaCoords::CENTROID, w)),
            Orbit::S21(w, a) => {
                let b = 0.5 * (1.0 - a);
                for l in [[a, b, b], [b, a, b], [b, b, a]] {
                    points.push((AreaCoords(l), w));
                }
            }
            Orbit::S111(w, a, b) => {
                let c = 1.0 - a - b;
                for l in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    points.push((AreaCoords(l), w));
                }
            }
        }
    }
    Ok(QuadRule { degree: exact, points })
}
