use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::grid::TimeGrid;

/// What a stream is used for. Part of the stream key, so two uses of the same
/// (replication, particle) never share randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    InitialDraws,
    CommonNoise,
    IndividualNoise,
    Bridge,
    Directions,
    Bootstrap,
    Configs,
    Other(u32),
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::InitialDraws => 1,
            Purpose::CommonNoise => 2,
            Purpose::IndividualNoise => 3,
            Purpose::Bridge => 4,
            Purpose::Directions => 5,
            Purpose::Bootstrap => 6,
            Purpose::Configs => 7,
            Purpose::Other(k) => 0x100 + k as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub experiment: u64,
    pub replication: u64,
    pub particle: u64,
    pub purpose: Purpose,
}

/// A keyed random stream. The generator is ChaCha8 keyed by a hash of
/// `(seed, id)`, so output depends only on the key and the draw counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub id: StreamId,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit key for an experiment name (FNV-1a).
pub fn experiment_key(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl RngStream {
    pub fn new(seed: u64, experiment: u64) -> Self {
        Self {
            seed,
            id: StreamId {
                experiment,
                replication: 0,
                particle: 0,
                purpose: Purpose::Other(0),
            },
        }
    }

    pub fn with(self, replication: u64, particle: u64, purpose: Purpose) -> Self {
        Self {
            seed: self.seed,
            id: StreamId {
                experiment: self.id.experiment,
                replication,
                particle,
                purpose,
            },
        }
    }

    pub fn replication(self, replication: u64) -> Self {
        self.with(replication, self.id.particle, self.id.purpose)
    }

    pub fn purpose(self, purpose: Purpose) -> Self {
        self.with(self.id.replication, self.id.particle, purpose)
    }

    pub fn particle(self, particle: u64) -> Self {
        self.with(self.id.replication, particle, self.id.purpose)
    }

    fn key(&self) -> [u8; 32] {
        let fields = [
            self.seed,
            self.id.experiment,
            self.id.replication,
            self.id.particle,
            self.id.purpose.code(),
        ];
        let mut state = 0x6A09_E667_F3BC_C908u64;
        for f in fields {
            state = splitmix(state ^ splitmix(f));
        }
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_mut(8).enumerate() {
            state = splitmix(state.wrapping_add(i as u64));
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        key
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key())
    }
}

/// Gaussian increments with covariance `dt * I`, laid out `(step, component)`.
pub fn brownian_increments(grid: &TimeGrid, d: usize, stream: &RngStream) -> Vec<f64> {
    let mut rng = stream.rng();
    let sd = grid.dt().sqrt();
    (0..grid.steps() * d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect()
}
