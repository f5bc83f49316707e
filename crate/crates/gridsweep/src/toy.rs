//! An analytically tractable Gaussian Markov random field over the sample
//! grid. Its exact windowed posterior implements the denoiser contract, so
//! every scheduling strategy can be measured against a brute-force oracle and
//! against the full-grid gold run.
//!
//! Prior per latent dimension: `x ~ N(mu, Lambda^{-1})` with
//! `Lambda = alpha * I + beta * Lap`, where `Lap` is the grid Laplacian with
//! circular view adjacency and linear time adjacency. The same precision is
//! shared across all latent dimensions.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::engine::{DenoiseRequest, Denoiser};
use crate::error::{Error, Result};
use crate::grid::{SampleGrid, SampleId};
use crate::schedule::NoiseSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub views: usize,
    pub frames: usize,
    pub latent_dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self { views: 12, frames: 1, latent_dim: 8, alpha: 1.0, beta: 5.0, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct ToyScene {
    pub params: SceneParams,
    /// Per-site mean vectors, site-major (`view * frames + time`), each of
    /// length `latent_dim`.
    pub mean_field: Vec<Vec<f64>>,
    pub precision: DMatrix<f64>,
    /// One exact draw from the prior; the "truth" every strategy chases.
    pub ground_truth: Vec<Vec<f64>>,
}

fn grid_laplacian(views: usize, frames: usize) -> DMatrix<f64> {
    let n = views * frames;
    let mut lap = DMatrix::zeros(n, n);
    let site = |v: usize, t: usize| v * frames + t;
    let mut add_edge = |a: usize, b: usize| {
        lap[(a, a)] += 1.0;
        lap[(b, b)] += 1.0;
        lap[(a, b)] -= 1.0;
        lap[(b, a)] -= 1.0;
    };
    // circular view adjacency (a single edge for the 2-view circle)
    if views > 1 {
        let wrap = if views == 2 { 1 } else { views };
        for v in 0..wrap {
            for t in 0..frames {
                add_edge(site(v, t), site((v + 1) % views, t));
            }
        }
    }
    // linear time adjacency
    for v in 0..views {
        for t in 0..frames.saturating_sub(1) {
            add_edge(site(v, t), site(v, t + 1));
        }
    }
    lap
}

impl ToyScene {
    pub fn generate(params: SceneParams) -> Result<Self> {
        let SceneParams { views, frames, latent_dim, alpha, beta, seed } = params;
        if views == 0 || frames == 0 || latent_dim == 0 {
            return Err(Error::Config("scene dimensions must be >= 1".into()));
        }
        if !(alpha > 0.0) || beta < 0.0 {
            return Err(Error::Config(format!("need alpha > 0 and beta >= 0, got {alpha}, {beta}")));
        }
        let n = views * frames;
        let precision = DMatrix::identity(n, n) * alpha + grid_laplacian(views, frames) * beta;

        // Mean field: three low-order Fourier harmonics in view angle and
        // normalized time, coefficients drawn from the seed.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        let mut mean_field = vec![vec![0.0; latent_dim]; n];
        for d in 0..latent_dim {
            let coeffs: Vec<[f64; 4]> = (1..=3)
                .map(|h| {
                    let a = normal() / h as f64;
                    let phi = normal();
                    let b = normal() / h as f64;
                    let psi = normal();
                    [a, phi, b, psi]
                })
                .collect();
            for v in 0..views {
                let theta = 2.0 * std::f64::consts::PI * v as f64 / views as f64;
                for t in 0..frames {
                    let s = if frames > 1 { t as f64 / (frames - 1) as f64 } else { 0.0 };
                    let mut value = 0.0;
                    for (h, c) in coeffs.iter().enumerate() {
                        let h = (h + 1) as f64;
                        value += c[0] * (h * theta + c[1]).cos();
                        value += c[2] * (std::f64::consts::PI * h * s + c[3]).cos();
                    }
                    mean_field[v * frames + t][d] = value;
                }
            }
        }

        let mut scene = Self { params, mean_field, precision, ground_truth: Vec::new() };
        scene.ground_truth = scene.sample_prior(seed.wrapping_add(1))?;
        Ok(scene)
    }

    pub fn site(&self, id: SampleId) -> usize {
        id.view * self.params.frames + id.time
    }

    pub fn site_count(&self) -> usize {
        self.params.views * self.params.frames
    }

    /// One exact prior draw per latent dimension, `x = mu + L^{-T} e` with
    /// `Lambda = L L^T`.
    pub fn sample_prior(&self, seed: u64) -> Result<Vec<Vec<f64>>> {
        let n = self.site_count();
        let chol = Cholesky::new(self.precision.clone())
            .ok_or_else(|| Error::Numerical("precision matrix not SPD".into()))?;
        let lower = chol.l();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![vec![0.0; self.params.latent_dim]; n];
        for d in 0..self.params.latent_dim {
            let e = DVector::from_iterator(
                n,
                (0..n).map(|_| {
                    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                }),
            );
            let z = lower
                .transpose()
                .solve_upper_triangular(&e)
                .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
            for i in 0..n {
                out[i][d] = self.mean_field[i][d] + z[i];
            }
        }
        Ok(out)
    }

    /// Builds a sample grid matching this scene, with input views holding the
    /// scene's ground truth latents.
    pub fn make_grid(
        &self,
        input_views: &[usize],
        master_seed: u64,
        schedule: &NoiseSchedule,
    ) -> Result<SampleGrid> {
        let mut grid = SampleGrid::init(
            self.params.views,
            self.params.frames,
            input_views,
            self.params.latent_dim,
            master_seed,
            schedule,
        )?;
        for id in grid.input_ids() {
            let latent = self.ground_truth[self.site(id)].clone();
            grid.set_input_latent(id, latent)?;
        }
        Ok(grid)
    }
}

/// A noisy observation of one site: `y = x0 + sigma * e`.
#[derive(Debug, Clone)]
pub struct NoisyObservation {
    pub id: SampleId,
    pub latent: Vec<f64>,
    pub sigma: f64,
}

/// Exact Gaussian conditioning for a window: member sites are observed with
/// their own noise levels, context sites (conditional mode only) are observed
/// exactly, and every other grid site is marginalized under the prior.
/// Returns `E[x0 | observations]` per member.
pub fn windowed_posterior(
    scene: &ToyScene,
    members: &[NoisyObservation],
    context: &[(SampleId, Vec<f64>)],
    conditional: bool,
) -> Result<Vec<Vec<f64>>> {
    let n = scene.site_count();
    let dim = scene.params.latent_dim;
    {
        let mut seen = std::collections::HashSet::new();
        for m in members {
            if m.sigma < 0.0 {
                return Err(Error::Config(format!("negative sigma for {:?}", m.id)));
            }
            if !seen.insert(m.id) {
                return Err(Error::Config(format!("duplicate member {:?}", m.id)));
            }
        }
    }

    // Exactly observed sites: context inputs, plus members at sigma = 0.
    let mut exact: std::collections::BTreeMap<usize, &[f64]> = std::collections::BTreeMap::new();
    if conditional {
        for (id, latent) in context {
            exact.insert(scene.site(*id), latent.as_slice());
        }
    }
    for m in members {
        if m.sigma == 0.0 {
            exact.insert(scene.site(m.id), m.latent.as_slice());
        }
    }

    let free: Vec<usize> = (0..n).filter(|i| !exact.contains_key(i)).collect();
    let free_pos: std::collections::HashMap<usize, usize> =
        free.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let exact_sites: Vec<usize> = exact.keys().copied().collect();
    let r = free.len();

    let mut x0 = vec![vec![0.0; dim]; members.len()];
    if r == 0 {
        for (mi, m) in members.iter().enumerate() {
            x0[mi] = exact[&scene.site(m.id)].to_vec();
        }
        return Ok(x0);
    }

    // Q = Lambda_RR + diag(1/sigma_i^2) on noisy member positions.
    let mut q = DMatrix::zeros(r, r);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            q[(a, b)] = scene.precision[(i, j)];
        }
    }
    for m in members {
        if m.sigma > 0.0 {
            let p = free_pos[&scene.site(m.id)];
            q[(p, p)] += 1.0 / (m.sigma * m.sigma);
        }
    }
    let chol = Cholesky::new(q)
        .ok_or_else(|| Error::Numerical("singular conditioning system in windowed posterior".into()))?;

    // rhs = Lambda_RR mu_R - Lambda_RC (x_C - mu_C) + diag(1/sigma^2) y
    for d in 0..dim {
        let mut rhs = DVector::zeros(r);
        for (a, &i) in free.iter().enumerate() {
            let mut acc = 0.0;
            for &j in &free {
                acc += scene.precision[(i, j)] * scene.mean_field[j][d];
            }
            for &j in &exact_sites {
                acc -= scene.precision[(i, j)] * (exact[&j][d] - scene.mean_field[j][d]);
            }
            rhs[a] = acc;
        }
        for m in members {
            if m.sigma > 0.0 {
                let p = free_pos[&scene.site(m.id)];
                rhs[p] += m.latent[d] / (m.sigma * m.sigma);
            }
        }
        let mean = chol.solve(&rhs);
        for (mi, m) in members.iter().enumerate() {
            let site = scene.site(m.id);
            x0[mi][d] = match free_pos.get(&site) {
                Some(&p) => mean[p],
                None => exact[&site][d],
            };
        }
    }
    Ok(x0)
}

/// The exact-posterior stand-in for the diffusion model. The conditional
/// branch sees context inputs as exact observations; the unconditional branch
/// ignores all conditioning.
pub struct GaussianPosteriorDenoiser<'a> {
    pub scene: &'a ToyScene,
}

impl Denoiser for GaussianPosteriorDenoiser<'_> {
    fn predict(&self, request: &DenoiseRequest) -> Result<Vec<Vec<f64>>> {
        let members: Vec<NoisyObservation> = request
            .members
            .iter()
            .map(|m| NoisyObservation { id: m.id, latent: m.latent.clone(), sigma: m.sigma })
            .collect();
        let context: Vec<(SampleId, Vec<f64>)> =
            request.context.iter().map(|c| (c.id, c.latent.clone())).collect();
        let all = windowed_posterior(self.scene, &members, &context, request.conditioned)?;
        Ok(request
            .members
            .iter()
            .zip(all)
            .filter(|(m, _)| m.steppable)
            .map(|(_, x0)| x0)
            .collect())
    }
}

/// The unattainable ideal: denoise every target jointly in one full-grid
/// window conditioned on all inputs, for all D steps.
pub fn gold_run(scene: &ToyScene, grid: &mut SampleGrid, schedule: &NoiseSchedule) -> Result<()> {
    use crate::engine::{run_plan, GuidanceConfig};
    use crate::plan::{Axis, DenoisePlan, WindowPlacement};
    let targets = grid.target_ids();
    if targets.is_empty() {
        return Ok(());
    }
    let placement = WindowPlacement {
        axis: Axis::Spatial,
        line: 0,
        steppable: vec![true; targets.len()],
        members: targets,
        steps: schedule.steps(),
        context_inputs: grid.input_ids(),
    };
    let plan = DenoisePlan {
        placements: vec![placement],
        total_steps: schedule.steps(),
        phase_split: 1,
    };
    let denoiser = GaussianPosteriorDenoiser { scene };
    let guidance = GuidanceConfig { scale: 1.0, train_drop_prob: 0.0 };
    run_plan(grid, &plan, &denoiser, &guidance, schedule)
}
