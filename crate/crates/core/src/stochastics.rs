//! Counter-based random variates.
//!
//! A draw is a pure function of its [`StreamKey`]: the key is hashed into a
//! 64-bit state which seeds a fresh xoshiro256++ generator. The scheme and the
//! closed-form references therefore read identical noise, and the order in
//! which workers visit particles has no influence on any value.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Poisson, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Means above this use rejection sampling instead of inversion.
pub const POISSON_INVERSION_MAX: f64 = 10.0;

type SampleFn = dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync;

/// User-supplied sampler for jump marks or initial states.
#[derive(Clone)]
pub struct Sampler(Arc<SampleFn>);

impl Sampler {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static,
    {
        Sampler(Arc::new(f))
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        (self.0)(rng)
    }
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Sampler(..)")
    }
}

/// Distribution of jump marks.
#[derive(Clone, Debug)]
pub enum JumpLaw {
    Dirac(f64),
    LogNormal { location: f64, scale: f64 },
    Custom(Sampler),
}

impl JumpLaw {
    /// Analytic mean of the mark, when known.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            JumpLaw::Dirac(v) => Some(v),
            JumpLaw::LogNormal { location, scale } => Some((location + 0.5 * scale * scale).exp()),
            JumpLaw::Custom(_) => None,
        }
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match self {
            JumpLaw::Dirac(v) => *v,
            JumpLaw::LogNormal { location, scale } => {
                let z: f64 = StandardNormal.sample(rng);
                (location + scale * z).exp()
            }
            JumpLaw::Custom(s) => s.sample(rng),
        }
    }
}

/// Which variate a key addresses within one (particle, step) cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Gaussian,
    PoissonCount,
    /// The k-th jump mark of the step.
    JumpSize(u32),
    /// Draw from the initial law (used at step 0).
    Initial,
}

impl Channel {
    fn code(self) -> u64 {
        match self {
            Channel::Gaussian => 1,
            Channel::PoissonCount => 2,
            Channel::Initial => 3,
            Channel::JumpSize(k) => 16 + k as u64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub particle: u64,
    pub step: u64,
    pub channel: Channel,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed from a base seed and an index (e.g. a replication).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ 0x6a09_e667_f3bc_c908).wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

impl StreamKey {
    pub fn new(seed: u64, particle: usize, step: usize, channel: Channel) -> Self {
        StreamKey {
            seed,
            particle: particle as u64,
            step: step as u64,
            channel,
        }
    }

    fn state(&self) -> u64 {
        let mut h = mix64(self.seed ^ 0x243f_6a88_85a3_08d3);
        h = mix64(h ^ self.particle.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        h = mix64(h ^ self.step.wrapping_mul(0xc2b2_ae3d_27d4_eb4f));
        mix64(h ^ self.channel.code().wrapping_mul(0x1656_67b1_9e37_79f9))
    }

    /// Generator positioned at the start of this key's substream.
    pub fn rng(&self) -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(self.state())
    }
}

/// Standard normal variate for `key`.
pub fn gaussian(key: StreamKey) -> f64 {
    StandardNormal.sample(&mut key.rng())
}

/// Poisson variate with mean `rate_times_dt`.
pub fn poisson_count(key: StreamKey, rate_times_dt: f64) -> u64 {
    if rate_times_dt <= 0.0 {
        return 0;
    }
    let mut rng = key.rng();
    if rate_times_dt <= POISSON_INVERSION_MAX {
        poisson_inversion(rng.random::<f64>(), rate_times_dt)
    } else {
        Poisson::new(rate_times_dt)
            .expect("positive finite Poisson mean")
            .sample(&mut rng) as u64
    }
}

fn poisson_inversion(u: f64, mean: f64) -> u64 {
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        let next = cdf + p;
        // tail mass below f64 resolution
        if next == cdf {
            break;
        }
        cdf = next;
    }
    k
}

/// Mark for jump `index` of the cell addressed by `key` (the key's channel is ignored).
pub fn jump_size(key: StreamKey, index: u32, law: &JumpLaw) -> f64 {
    let key = StreamKey {
        channel: Channel::JumpSize(index),
        ..key
    };
    law.sample(&mut key.rng())
}

/// `count` i.i.d. marks for the cell addressed by `key`.
pub fn jump_sizes(key: StreamKey, count: u64, law: &JumpLaw) -> Vec<f64> {
    (0..count as u32).map(|k| jump_size(key, k, law)).collect()
}

/// Noise consumed by one particle over one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepNoise {
    pub gaussian: f64,
    pub count: u64,
    pub marks: Vec<f64>,
}

/// Handle on the full noise of a run: `particles` x `steps` cells, each
/// regenerated on demand from its keys. Steps are numbered `1..=steps`.
#[derive(Clone, Debug)]
pub struct NoiseRecord {
    pub seed: u64,
    pub particles: usize,
    pub steps: usize,
    pub rate_dt: f64,
    pub law: JumpLaw,
}

impl NoiseRecord {
    pub fn new(seed: u64, particles: usize, steps: usize, rate_dt: f64, law: JumpLaw) -> Self {
        NoiseRecord {
            seed,
            particles,
            steps,
            rate_dt,
            law,
        }
    }

    #[inline]
    pub fn key(&self, particle: usize, step: usize, channel: Channel) -> StreamKey {
        StreamKey::new(self.seed, particle, step, channel)
    }

    #[inline]
    pub fn gaussian(&self, particle: usize, step: usize) -> f64 {
        gaussian(self.key(particle, step, Channel::Gaussian))
    }

    #[inline]
    pub fn count(&self, particle: usize, step: usize) -> u64 {
        poisson_count(self.key(particle, step, Channel::PoissonCount), self.rate_dt)
    }

    /// Sum of `f(mark)` over the `count` marks of a cell.
    #[inline]
    pub fn sum_marks<F: FnMut(f64) -> f64>(&self, particle: usize, step: usize, count: u64, mut f: F) -> f64 {
        let key = self.key(particle, step, Channel::JumpSize(0));
        let mut acc = 0.0;
        for k in 0..count as u32 {
            acc += f(jump_size(key, k, &self.law));
        }
        acc
    }

    pub fn draw(&self, particle: usize, step: usize) -> StepNoise {
        let count = self.count(particle, step);
        StepNoise {
            gaussian: self.gaussian(particle, step),
            count,
            marks: jump_sizes(self.key(particle, step, Channel::JumpSize(0)), count, &self.law),
        }
    }

    /// Writes `particle,step,gaussian,count,marks` rows, marks separated by `;`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "particle,step,gaussian,count,marks")?;
        for p in 0..self.particles {
            for s in 1..=self.steps {
                let cell = self.draw(p, s);
                let marks: Vec<String> = cell.marks.iter().map(|m| format!("{m:.16e}")).collect();
                writeln!(out, "{p},{s},{:.16e},{},{}", cell.gaussian, cell.count, marks.join(";"))?;
            }
        }
        Ok(())
    }
}
