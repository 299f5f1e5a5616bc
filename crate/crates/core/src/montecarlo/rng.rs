use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub(crate) type PathRng = Xoshiro256PlusPlus;

/// Independent stream families, so e.g. exact samples never reuse the
/// normals of simulated paths drawn with the same seed.
#[derive(Clone, Copy)]
pub(crate) enum Domain {
    Paths = 1,
    Killing = 2,
    Exact = 3,
    Passage = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The RNG of path `index`, a pure function of `(seed, domain, index)`.
pub(crate) fn stream(seed: u64, domain: Domain, index: u64) -> PathRng {
    let key = splitmix64(splitmix64(seed ^ splitmix64(domain as u64)) ^ index);
    Xoshiro256PlusPlus::seed_from_u64(key)
}
