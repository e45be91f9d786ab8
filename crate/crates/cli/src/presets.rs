//! Shipped scenarios, embedded at build time.

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

macro_rules! preset {
    ($name:literal, $summary:literal) => {
        Preset {
            name: $name,
            summary: $summary,
            text: include_str!(concat!("../presets/", $name, ".toml")),
        }
    };
}

pub const PRESETS: &[Preset] = &[
    preset!(
        "triangle",
        "unit equilateral triangle in the plane, collapse at 2/3"
    ),
    preset!("square", "unit square in the plane, collapse at 1"),
    preset!(
        "euclid_ngon",
        "regular hexagon of circumradius 1, collapse at 2"
    ),
    preset!(
        "euclid_random_cube",
        "10 uniform bugs in the unit cube of R^3"
    ),
    preset!(
        "torus_10",
        "12 bugs near the (1,0) circle of the unit torus"
    ),
    preset!(
        "torus_11",
        "12 bugs near the (1,1) diagonal of the unit torus"
    ),
    preset!(
        "torus_short",
        "null-homotopic loop on the unit torus, shorter than every closed geodesic"
    ),
    preset!(
        "mobius",
        "10 bugs near the core circle of a flat Moebius band"
    ),
    preset!(
        "sphere",
        "12 bugs near the equator of the unit sphere (report only)"
    ),
    preset!(
        "hemisphere",
        "8 bugs in an open hemisphere of the unit sphere"
    ),
    preset!(
        "rp2",
        "12 bugs near a projective line of RP^2 (report only)"
    ),
    preset!("dumbbell_neck", "10 bugs within 0.05 of the dumbbell neck"),
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
