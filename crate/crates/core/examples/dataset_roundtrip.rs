//! Generate an OT dataset, write it to disk and load it back with checksum
//! and certificate verification.

use palm_l2o::datasets::{build_ot_dataset, load_dataset, save_dataset, OtSource};

fn main() -> palm_l2o::Result<()> {
    let dir = std::env::temp_dir().join(format!("palm-l2o-example-{}", std::process::id()));
    let ds = build_ot_dataset(6, 6, 20, 42, &OtSource::Random)?;
    let manifest = save_dataset(&ds, &dir)?;
    println!("wrote {} instances to {}", manifest.count, dir.display());
    for (file, sum) in &manifest.checksums {
        println!("  {file:<14} {}", &sum[..16]);
    }
    let back = load_dataset(&dir)?;
    println!(
        "reloaded: identical = {}, train {}, test {}, max certificate {:.1e}",
        back == ds,
        back.train.len(),
        back.test.len(),
        back.max_certificate()
    );
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
