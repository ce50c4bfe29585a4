//! Grid primitives: box-average convolution and binary dilation on a
//! synthetic silhouette, exported as PGM images and the binary map
//! container.
//!
//! Run with: `cargo run --example box_filter [out_dir]`

use rayprune::{binary_dilate, box_convolve, BoxKernelSpec, ScalarMap};

fn main() -> rayprune::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rayprune-box-filter"));
    std::fs::create_dir_all(&out)?;

    // A disk with a detached dot, stand-in for a silhouette.
    let mut silhouette = ScalarMap::zeros(128, 128)?;
    for y in 0..128usize {
        for x in 0..128usize {
            let (dx, dy) = (x as f64 - 52.0, y as f64 - 64.0);
            if dx * dx + dy * dy <= 24.0 * 24.0 {
                silhouette.set(x, y, 1.0);
            }
        }
    }
    silhouette.set(104, 30, 1.0);

    let averaged = box_convolve(&silhouette, BoxKernelSpec::new(21)?)?;
    let dilated = binary_dilate(&silhouette, 10)?;

    println!("input support:    {} pixels", silhouette.count_above(0.0));
    println!(
        "averaged support: {} pixels, {} above 0.9",
        averaged.count_above(0.0),
        averaged.count_above(0.9)
    );
    println!("dilated support:  {} pixels", dilated.count_above(0.0));

    silhouette.save_pgm(out.join("silhouette.pgm"))?;
    averaged.save_pgm(out.join("averaged.pgm"))?;
    dilated.save_pgm(out.join("dilated.pgm"))?;
    averaged.save_container(out.join("averaged.epsm"))?;

    // Round-trip through the container format.
    let back = ScalarMap::load_container(out.join("averaged.epsm"))?;
    assert_eq!(back, averaged);
    println!("artifacts in {}", out.display());
    Ok(())
}
