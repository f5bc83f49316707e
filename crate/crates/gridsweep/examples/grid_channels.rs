//! Assembles the 15-channel conditioning stack for one view: 4 latent image
//! channels, 4 skeleton channels, the 6-channel Plücker map, and the binary
//! input/target mask channel.

use gridsweep::camera::{circle_rig, plucker_embed};
use gridsweep::grid::{assemble_channels, ChannelLayout, ChannelMap};

fn main() -> gridsweep::Result<()> {
    let cams = circle_rig(4, 3.0, 1.0, 32, 24)?;
    let cam = &cams[0];
    let (h, w) = (cam.height, cam.width);

    // stand-ins for the VAE latents and the downsampled skeleton render
    let mut image = ChannelMap::new(h, w, 4);
    let mut skeleton = ChannelMap::new(h, w, 4);
    for y in 0..h {
        for x in 0..w {
            for c in 0..4 {
                *image.at_mut(y, x, c) = ((x + y + c) % 7) as f32 / 7.0;
                *skeleton.at_mut(y, x, c) = if x == y { 1.0 } else { 0.0 };
            }
        }
    }
    let plucker = plucker_embed(cam);

    let layout = ChannelLayout::default();
    for (role, is_input) in [("input", true), ("target", false)] {
        let stack = assemble_channels(&image, &skeleton, &plucker, is_input, &layout)?;
        println!(
            "{role}: {}x{}x{} stack, mask channel = {}",
            stack.height,
            stack.width,
            stack.channels,
            stack.at(0, 0, layout.total() - 1),
        );
    }
    println!("channel order: image[0..4] | skeleton[4..8] | plucker[8..14] | mask[14]");
    Ok(())
}
