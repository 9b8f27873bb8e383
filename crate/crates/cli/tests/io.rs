use fscinfo::{Curve64, CurveKind, ShellFlags, Volume64};
use fscinfo_cli::curves::{from_csv, from_json, read_curves, to_csv, to_json, write_curves, CurveFile, Format};
use fscinfo_cli::mrc::{encode_mrc, parse_mrc, read_mrc, write_mrc, Endian};
use fscinfo_cli::CliError;
use proptest::prelude::*;
use std::path::Path;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn byte_swapped_fixture_matches_native() {
    let le = read_mrc(&fixture("small_le.mrc")).unwrap();
    let be = read_mrc(&fixture("small_be.mrc")).unwrap();
    assert_eq!(le.header.endian, Endian::Little);
    assert_eq!(be.header.endian, Endian::Big);
    assert_eq!(le.volume, be.volume);
    assert_eq!(le.volume.dims(), &[4, 5, 6]);
    assert_eq!(le.volume.step(), 1.5);
}

#[test]
fn file_round_trip_keeps_step() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.mrc");
    let v = Volume64::from_fn(&[6, 7, 8], 0.8467, |c| (c[0] * 100 + c[1] * 10 + c[2]) as f64 * 0.5).unwrap();
    write_mrc(&v, &path).unwrap();
    let back = read_mrc(&path).unwrap().volume;
    assert_eq!(back, v);
}

#[test]
fn corrupt_files_give_distinct_errors() {
    let v = Volume64::from_fn(&[4, 4, 4], 1.0, |c| c[0] as f64).unwrap();
    let bytes = encode_mrc(&v, Endian::Little, &[]).unwrap();
    assert!(matches!(parse_mrc(&bytes[..500]), Err(CliError::Truncated { .. })));
    assert!(matches!(parse_mrc(&bytes[..bytes.len() - 4]), Err(CliError::Truncated { .. })));
    let mut bad = bytes.clone();
    bad[208..212].copy_from_slice(b"XXXX");
    assert!(matches!(parse_mrc(&bad), Err(CliError::BadMagic)));
    let mut mode = bytes;
    mode[12..16].copy_from_slice(&7i32.to_le_bytes());
    assert!(matches!(parse_mrc(&mode), Err(CliError::UnsupportedMode(7))));
}

fn curve(kind: CurveKind, label: &str, values: Vec<f64>) -> Curve64 {
    let n = values.len();
    let freq = (0..n).map(|i| i as f64 / (2.0 * (n - 1) as f64 * 1.3)).collect();
    Curve64::new(kind, values, freq, 1.0 / 2.6).unwrap().with_label(label)
}

#[test]
fn curve_files_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = curve(CurveKind::Fsc, "fsc", vec![1.0, 0.5, 0.25, 0.0]);
    c.flags[3] = ShellFlags::EMPTY;
    let t = curve(CurveKind::Threshold, "half-bit", vec![1.0, 0.4, 0.3, 0.25]);
    let f = CurveFile::new(&[8, 8, 8], 1.3, vec![c, t]).unwrap().with_param("symmetry", 1);
    for name in ["c.csv", "c.json"] {
        let p = dir.path().join(name);
        write_curves(&f, &p, Format::from_path(&p)).unwrap();
        let back = read_curves(&p).unwrap();
        assert_eq!(back.curves, f.curves);
        assert_eq!(back.params, f.params);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mrc_round_trip_is_bit_identical(
        nx in 2usize..7, ny in 2usize..7, nz in 1usize..5,
        step in 0.1f64..5.0,
        big in any::<bool>(),
        seed in any::<u32>(),
    ) {
        let dims: Vec<usize> = if nz == 1 { vec![ny, nx] } else { vec![nz, ny, nx] };
        let v = Volume64::from_fn(&dims, step, |c| {
            let h = c.iter().fold(seed as u64, |a, &x| a.wrapping_mul(6364136223846793005).wrapping_add(x as u64 + 1));
            ((h >> 40) as f32 / 1e3 - 8.0) as f64
        }).unwrap();
        let endian = if big { Endian::Big } else { Endian::Little };
        let back = parse_mrc(&encode_mrc(&v, endian, &[]).unwrap()).unwrap().volume;
        prop_assert_eq!(back.dims(), v.dims());
        prop_assert_eq!(back.step(), step);
        prop_assert!(back.data().iter().zip(v.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn curve_text_round_trip(values in prop::collection::vec(-1e6f64..1e6, 2..20), json in any::<bool>()) {
        let f = CurveFile::new(&[40, 40], 0.9, vec![curve(CurveKind::Fsi, "fsi", values)]).unwrap();
        let back = if json { from_json(&to_json(&f).unwrap()).unwrap() } else { from_csv(&to_csv(&f).unwrap()).unwrap() };
        prop_assert_eq!(back.curves, f.curves);
    }
}
