//! The sample grid: a V x T lattice of latent samples, each either a clean
//! conditioning input or a noisy generation target, plus the channel layout
//! used to assemble conditioning maps.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::NoiseSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SampleId {
    pub view: usize,
    pub time: usize,
}

impl SampleId {
    pub fn new(view: usize, time: usize) -> Self {
        Self { view, time }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Input,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisTopology {
    Circular,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleState {
    pub latent: Vec<f64>,
    pub role: Role,
    /// Schedule index k in [0, D]. Inputs sit at D (fully clean); targets
    /// start at 0 and only ever advance.
    pub step_index: usize,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub views: usize,
    pub frames: usize,
    pub latent_dim: usize,
    pub input_views: BTreeSet<usize>,
    pub spatial_topology: AxisTopology,
    pub temporal_topology: AxisTopology,
    pub master_seed: u64,
    states: Vec<SampleState>,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-sample seed derived from (master_seed, view, time) so identical grids
/// are reproducible regardless of construction order.
pub fn sample_seed(master_seed: u64, view: usize, time: usize) -> u64 {
    let mut s = master_seed;
    let a = splitmix64(&mut s);
    let mut t = a ^ (view as u64).wrapping_mul(0xD1B54A32D192ED03);
    let b = splitmix64(&mut t);
    let mut u = b ^ (time as u64).wrapping_mul(0x8CB92BA72F3D8DD7);
    splitmix64(&mut u)
}

impl SampleGrid {
    /// Builds a grid with target samples initialized to `sigma[0] * e`,
    /// `e ~ N(0, I)`, and input samples initialized to zero latents at k = D.
    /// Fill input latents afterwards with [`SampleGrid::set_input_latent`].
    pub fn init(
        views: usize,
        frames: usize,
        input_views: &[usize],
        latent_dim: usize,
        master_seed: u64,
        schedule: &NoiseSchedule,
    ) -> Result<Self> {
        if views == 0 || frames == 0 || latent_dim == 0 {
            return Err(Error::Config("grid dimensions must be >= 1".into()));
        }
        if input_views.is_empty() {
            return Err(Error::Config("input_views must be non-empty".into()));
        }
        let input_set: BTreeSet<usize> = input_views.iter().copied().collect();
        if let Some(&v) = input_set.iter().find(|&&v| v >= views) {
            return Err(Error::Config(format!("input view {v} out of range 0..{views}")));
        }
        let sigma0 = schedule.sigma_max();
        let steps = schedule.steps();
        let mut states = Vec::with_capacity(views * frames);
        for view in 0..views {
            for time in 0..frames {
                let seed = sample_seed(master_seed, view, time);
                if input_set.contains(&view) {
                    states.push(SampleState {
                        latent: vec![0.0; latent_dim],
                        role: Role::Input,
                        step_index: steps,
                        rng_seed: seed,
                    });
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let latent = (0..latent_dim)
                        .map(|_| sigma0 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                        .collect();
                    states.push(SampleState {
                        latent,
                        role: Role::Target,
                        step_index: 0,
                        rng_seed: seed,
                    });
                }
            }
        }
        Ok(Self {
            views,
            frames,
            latent_dim,
            input_views: input_set,
            spatial_topology: AxisTopology::Circular,
            temporal_topology: AxisTopology::Linear,
            master_seed,
            states,
        })
    }

    fn index(&self, id: SampleId) -> usize {
        debug_assert!(id.view < self.views && id.time < self.frames);
        id.view * self.frames + id.time
    }

    pub fn state(&self, id: SampleId) -> &SampleState {
        &self.states[self.index(id)]
    }

    pub fn state_mut(&mut self, id: SampleId) -> &mut SampleState {
        let i = self.index(id);
        &mut self.states[i]
    }

    pub fn set_input_latent(&mut self, id: SampleId, latent: Vec<f64>) -> Result<()> {
        if latent.len() != self.latent_dim {
            return Err(Error::Shape(format!(
                "latent dim {} != grid dim {}",
                latent.len(),
                self.latent_dim
            )));
        }
        let state = self.state_mut(id);
        if state.role != Role::Input {
            return Err(Error::Config(format!("sample {id:?} is not an input")));
        }
        state.latent = latent;
        Ok(())
    }

    /// Target view indices in ascending order.
    pub fn target_views(&self) -> Vec<usize> {
        (0..self.views).filter(|v| !self.input_views.contains(v)).collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = SampleId> + '_ {
        (0..self.views).flat_map(move |v| (0..self.frames).map(move |t| SampleId::new(v, t)))
    }

    pub fn target_ids(&self) -> Vec<SampleId> {
        self.ids()
            .filter(|id| self.state(*id).role == Role::Target)
            .collect()
    }

    pub fn input_ids(&self) -> Vec<SampleId> {
        self.ids()
            .filter(|id| self.state(*id).role == Role::Input)
            .collect()
    }

    /// Flattens all target latents in id order (view-major).
    pub fn target_latents_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for id in self.target_ids() {
            out.extend_from_slice(&self.state(id).latent);
        }
        out
    }
}

/// Channel counts for the assembled conditioning stack. Defaults 4/4/6/1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelLayout {
    pub image_ch: usize,
    pub skeleton_ch: usize,
    pub plucker_ch: usize,
    pub mask_ch: usize,
}

impl Default for ChannelLayout {
    fn default() -> Self {
        Self { image_ch: 4, skeleton_ch: 4, plucker_ch: 6, mask_ch: 1 }
    }
}

impl ChannelLayout {
    pub fn total(&self) -> usize {
        self.image_ch + self.skeleton_ch + self.plucker_ch + self.mask_ch
    }
}

/// A channel-last H x W x C map of f32 values.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMap {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl ChannelMap {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self { height, width, channels, data: vec![0.0; height * width * channels] }
    }

    pub fn at(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn at_mut(&mut self, y: usize, x: usize, c: usize) -> &mut f32 {
        &mut self.data[(y * self.width + x) * self.channels + c]
    }
}

/// Concatenates image | skeleton | plucker | mask maps per pixel. The mask
/// channels are constant 1 for conditioning inputs and 0 for targets.
pub fn assemble_channels(
    image: &ChannelMap,
    skeleton: &ChannelMap,
    plucker: &ChannelMap,
    is_input: bool,
    layout: &ChannelLayout,
) -> Result<ChannelMap> {
    let (h, w) = (image.height, image.width);
    for (name, m) in [("skeleton", skeleton), ("plucker", plucker)] {
        if m.height != h || m.width != w {
            return Err(Error::Shape(format!(
                "{name} map is {}x{}, image map is {h}x{w}",
                m.height, m.width
            )));
        }
    }
    for (name, m, want) in [
        ("image", image, layout.image_ch),
        ("skeleton", skeleton, layout.skeleton_ch),
        ("plucker", plucker, layout.plucker_ch),
    ] {
        if m.channels != want {
            return Err(Error::Shape(format!(
                "{name} map has {} channels, layout expects {want}",
                m.channels
            )));
        }
    }
    let total = layout.total();
    let mut out = ChannelMap::new(h, w, total);
    let mask_value = if is_input { 1.0 } else { 0.0 };
    for y in 0..h {
        for x in 0..w {
            let mut c = 0;
            for src in [image, skeleton, plucker] {
                for sc in 0..src.channels {
                    *out.at_mut(y, x, c) = src.at(y, x, sc);
                    c += 1;
                }
            }
            for _ in 0..layout.mask_ch {
                *out.at_mut(y, x, c) = mask_value;
                c += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule() -> NoiseSchedule {
        NoiseSchedule::geometric(24, 10.0, 0.01).unwrap()
    }

    #[test]
    fn tiny_grid_roles() {
        let g = SampleGrid::init(2, 1, &[0], 3, 7, &schedule()).unwrap();
        assert_eq!(g.state(SampleId::new(0, 0)).role, Role::Input);
        assert_eq!(g.state(SampleId::new(0, 0)).step_index, 24);
        assert_eq!(g.state(SampleId::new(1, 0)).role, Role::Target);
        assert_eq!(g.state(SampleId::new(1, 0)).step_index, 0);
    }

    #[test]
    fn init_is_deterministic() {
        let s = schedule();
        let a = SampleGrid::init(4, 3, &[0, 2], 5, 99, &s).unwrap();
        let b = SampleGrid::init(4, 3, &[0, 2], 5, 99, &s).unwrap();
        assert_eq!(a, b);
        let c = SampleGrid::init(4, 3, &[0, 2], 5, 100, &s).unwrap();
        assert_ne!(a.state(SampleId::new(1, 0)).latent, c.state(SampleId::new(1, 0)).latent);
    }

    #[test]
    fn sixteen_view_composition() {
        let g = SampleGrid::init(16, 1, &[0, 4, 8, 12], 2, 0, &schedule()).unwrap();
        assert_eq!(g.target_ids().len(), 12);
        assert_eq!(g.input_ids().len(), 4);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(SampleGrid::init(4, 1, &[], 2, 0, &schedule()).is_err());
        assert!(SampleGrid::init(4, 1, &[4], 2, 0, &schedule()).is_err());
    }

    #[test]
    fn no_seed_collisions_64x64() {
        let mut seen = std::collections::HashSet::new();
        for v in 0..64 {
            for t in 0..64 {
                assert!(seen.insert(sample_seed(1234, v, t)), "collision at ({v},{t})");
            }
        }
    }

    #[test]
    fn assemble_default_layout() {
        let layout = ChannelLayout::default();
        let img = ChannelMap::new(2, 3, 4);
        let skel = ChannelMap::new(2, 3, 4);
        let plk = ChannelMap::new(2, 3, 6);
        let out = assemble_channels(&img, &skel, &plk, true, &layout).unwrap();
        assert_eq!(out.channels, 15);
        // mask channel is the last one, all ones for inputs
        for y in 0..2 {
            for x in 0..3 {
                assert_eq!(out.at(y, x, 14), 1.0);
            }
        }
        let out2 = assemble_channels(&img, &skel, &plk, false, &layout).unwrap();
        assert_eq!(out2.at(0, 0, 14), 0.0);
    }

    #[test]
    fn assemble_custom_layout() {
        let layout = ChannelLayout { image_ch: 2, skeleton_ch: 2, plucker_ch: 6, mask_ch: 1 };
        let out = assemble_channels(
            &ChannelMap::new(1, 1, 2),
            &ChannelMap::new(1, 1, 2),
            &ChannelMap::new(1, 1, 6),
            false,
            &layout,
        )
        .unwrap();
        assert_eq!(out.channels, 11);
    }

    #[test]
    fn assemble_rejects_mismatched_resolution() {
        let layout = ChannelLayout::default();
        let err = assemble_channels(
            &ChannelMap::new(2, 2, 4),
            &ChannelMap::new(2, 3, 4),
            &ChannelMap::new(2, 2, 6),
            true,
            &layout,
        );
        assert!(err.is_err());
    }
}
