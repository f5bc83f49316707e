//! File formats: grid snapshots (JSON manifest + little-endian f32 flat
//! latents), Plücker map dumps, camera/keypoint/topology JSON, and PNG masks.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::{Camera, CameraJson};
use crate::error::{Error, Result};
use crate::grid::{AxisTopology, ChannelMap, Role, SampleGrid, SampleId};
use crate::schedule::NoiseSchedule;
use crate::skeleton::{RgbaImage, Skeleton2D};

pub fn write_f32_le(path: &Path, values: impl Iterator<Item = f32>) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    for v in values {
        file.write_all(&v.to_le_bytes())?;
    }
    file.flush()?;
    Ok(())
}

pub fn read_f32_le(path: &Path) -> Result<Vec<f32>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Config(format!("{} is not a multiple of 4 bytes", path.display())));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridManifest {
    pub views: usize,
    pub frames: usize,
    pub latent_dim: usize,
    pub input_views: Vec<usize>,
    pub spatial_topology: AxisTopology,
    pub temporal_topology: AxisTopology,
    pub master_seed: u64,
    pub schedule: NoiseSchedule,
    /// Row-major (view-major, then time): role, step index and seed per sample.
    pub roles: Vec<Role>,
    pub step_indices: Vec<usize>,
    pub rng_seeds: Vec<u64>,
    pub latents_file: String,
}

/// Writes `manifest.json` plus `latents.f32` (row-major view-major, f32 LE)
/// into `dir`.
pub fn save_grid(grid: &SampleGrid, schedule: &NoiseSchedule, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let ids: Vec<SampleId> = grid.ids().collect();
    let manifest = GridManifest {
        views: grid.views,
        frames: grid.frames,
        latent_dim: grid.latent_dim,
        input_views: grid.input_views.iter().copied().collect(),
        spatial_topology: grid.spatial_topology,
        temporal_topology: grid.temporal_topology,
        master_seed: grid.master_seed,
        schedule: schedule.clone(),
        roles: ids.iter().map(|&id| grid.state(id).role).collect(),
        step_indices: ids.iter().map(|&id| grid.state(id).step_index).collect(),
        rng_seeds: ids.iter().map(|&id| grid.state(id).rng_seed).collect(),
        latents_file: "latents.f32".into(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    write_f32_le(
        &dir.join("latents.f32"),
        ids.iter().flat_map(|&id| grid.state(id).latent.iter().map(|&v| v as f32)),
    )
}

pub fn load_grid(dir: &Path) -> Result<(SampleGrid, NoiseSchedule)> {
    let manifest: GridManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let latents = read_f32_le(&dir.join(&manifest.latents_file))?;
    let expected = manifest.views * manifest.frames * manifest.latent_dim;
    if latents.len() != expected {
        return Err(Error::Shape(format!(
            "latents file holds {} floats, manifest expects {expected}",
            latents.len()
        )));
    }
    let mut grid = SampleGrid::init(
        manifest.views,
        manifest.frames,
        &manifest.input_views,
        manifest.latent_dim,
        manifest.master_seed,
        &manifest.schedule,
    )?;
    grid.spatial_topology = manifest.spatial_topology;
    grid.temporal_topology = manifest.temporal_topology;
    for (i, id) in grid.ids().collect::<Vec<_>>().into_iter().enumerate() {
        let state = grid.state_mut(id);
        state.role = manifest.roles[i];
        state.step_index = manifest.step_indices[i];
        state.rng_seed = manifest.rng_seeds[i];
        state.latent = latents[i * manifest.latent_dim..(i + 1) * manifest.latent_dim]
            .iter()
            .map(|&v| v as f64)
            .collect();
    }
    Ok((grid, manifest.schedule))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelMapManifest {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data_file: String,
}

/// Writes a channel-last flat f32 file plus a JSON sidecar with dimensions.
pub fn save_channel_map(map: &ChannelMap, base: &Path) -> Result<()> {
    let data_file = base.with_extension("f32");
    let manifest = ChannelMapManifest {
        height: map.height,
        width: map.width,
        channels: map.channels,
        data_file: data_file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    fs::write(base.with_extension("json"), serde_json::to_string_pretty(&manifest)?)?;
    write_f32_le(&data_file, map.data.iter().copied())
}

pub fn load_cameras(path: &Path) -> Result<Vec<Camera>> {
    let raw: Vec<CameraJson> = serde_json::from_str(&fs::read_to_string(path)?)?;
    raw.iter().map(Camera::from_json).collect()
}

pub fn save_cameras(cameras: &[Camera], path: &Path) -> Result<()> {
    let raw: Vec<CameraJson> = cameras.iter().map(Camera::to_json).collect();
    fs::write(path, serde_json::to_string_pretty(&raw)?)?;
    Ok(())
}

/// Keypoint file: one `Skeleton2D` per view, `[[{u, v, conf}, ...], ...]`.
pub fn load_keypoints(path: &Path) -> Result<Vec<Skeleton2D>> {
    let raw: Vec<Vec<crate::skeleton::Joint2D>> =
        serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(raw.into_iter().map(|joints| Skeleton2D { joints }).collect())
}

pub fn save_png_rgba(img: &RgbaImage, path: &Path) -> Result<()> {
    let buffer = image::RgbaImage::from_raw(img.width as u32, img.height as u32, img.data.clone())
        .ok_or_else(|| Error::Shape("rgba buffer size mismatch".into()))?;
    buffer.save(path)?;
    Ok(())
}

/// Loads an 8-bit PNG as a binary mask: 0 stays 0, 255 becomes 1, anything
/// else is rejected as non-binary.
pub fn load_binary_mask(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let img = image::open(path)?.into_luma8();
    let (w, h) = img.dimensions();
    let mut mask = Vec::with_capacity((w * h) as usize);
    for &v in img.as_raw() {
        match v {
            0 => mask.push(0),
            255 => mask.push(1),
            other => {
                return Err(Error::Config(format!(
                    "{}: non-binary pixel value {other}",
                    path.display()
                )))
            }
        }
    }
    Ok((w as usize, h as usize, mask))
}

pub fn save_binary_mask(width: usize, height: usize, mask: &[u8], path: &Path) -> Result<()> {
    let data: Vec<u8> = mask.iter().map(|&v| if v > 0 { 255 } else { 0 }).collect();
    let buffer = image::GrayImage::from_raw(width as u32, height as u32, data)
        .ok_or_else(|| Error::Shape("mask size mismatch".into()))?;
    buffer.save(path)?;
    Ok(())
}
