//! Save an index, reload it, and show that a corrupted file is rejected.

use favor::bench::io::{read_attributes, read_vectors, write_attributes, write_vectors, VectorFormat};
use favor::bench::synth::synthetic_dataset;
use favor::{BuildParams, HnswIndex, VectorDataset};

fn main() -> favor::Result<()> {
    let dir = std::env::temp_dir().join(format!("favor-persistence-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let ds = synthetic_dataset(3000, 12, 1, 1, 1, 9);
    write_vectors(dir.join("base.fvecs"), &ds, VectorFormat::Fvecs)?;
    write_attributes(dir.join("base.attr"), ds.attributes())?;
    let index = HnswIndex::build(ds, BuildParams::new(12, 60))?;
    index.save(dir.join("base.idx"))?;

    let load_ds = || -> favor::Result<VectorDataset> {
        read_vectors(dir.join("base.fvecs"), VectorFormat::Fvecs)?.with_attributes(read_attributes(dir.join("base.attr"))?)
    };
    let back = HnswIndex::load(dir.join("base.idx"), load_ds()?)?;
    println!("reloaded: identical bytes = {}", back.to_bytes() == index.to_bytes());

    let mut bytes = std::fs::read(dir.join("base.idx"))?;
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    std::fs::write(dir.join("bad.idx"), &bytes)?;
    match HnswIndex::load(dir.join("bad.idx"), load_ds()?) {
        Ok(_) => println!("corruption went unnoticed"),
        Err(e) => println!("corrupted file: {e} (exit code {})", e.exit_code()),
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
