//! Write a system to the binary format, read it back, and show what the
//! reader reports for damaged files.
//!
//! cargo run --example file_roundtrip

use blocktri::io::{read_btd, write_btd, BtdFileHeader};
use blocktri::synth::generate_spd_btd;

fn main() -> blocktri::Result<()> {
    let dir = std::env::temp_dir().join(format!("blocktri-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("system.btd");

    let (a, b) = generate_spd_btd(10, 3, 2, 9);
    write_btd(&path, &a, Some(&b))?;
    let header = BtdFileHeader {
        num_blocks: 10,
        block_dim: 3,
        cols: 2,
        flags: 1,
    };
    println!(
        "{} bytes on disk, header predicts {}",
        std::fs::metadata(&path)?.len(),
        header.file_len()
    );

    let (a2, b2) = read_btd(&path)?;
    println!("round trip exact: {}", a2 == a && b2.as_ref() == Some(&b));

    let bytes = std::fs::read(&path)?;
    std::fs::write(&path, &bytes[..bytes.len() - 100])?;
    println!("truncated: {}", read_btd(&path).unwrap_err());

    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"XXXX");
    std::fs::write(&path, &bad)?;
    println!("bad magic: {}", read_btd(&path).unwrap_err());

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
