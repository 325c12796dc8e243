//! Files written by the CLI: energy reports as CSV, canonical JSON and
//! checksums. Every file is written to a temporary sibling and renamed.

use std::io::Write;
use std::path::Path;

use dcl_core::invariants::{EnergyReport, REPORT_ORDER};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

pub const REPORT_COLUMNS: [&str; 8] = ["t", "l2_ux", "E", "h1", "h2", "h3", "off_manifold", "nt_quantity"];

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Pretty JSON with object keys in sorted order.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let tree = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&tree)?;
    s.push('\n');
    Ok(s)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn field(x: f64) -> String {
    // `Display` prints the shortest string that parses back to the same value.
    format!("{x}")
}

pub fn report_csv(rows: &[EnergyReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS)?;
    for r in rows {
        let mut record = vec![field(r.t), field(r.l2_ux), field(r.energy)];
        record.extend((1..=REPORT_ORDER).map(|k| r.hm_norms.get(k).map_or_else(String::new, |v| field(*v))));
        record.push(field(r.off_manifold));
        record.push(r.nt_quantity.map_or_else(String::new, field));
        w.write_record(&record)?;
    }
    w.into_inner().map_err(|e| LabError::Io(e.into_error()))
}

pub fn parse_report_csv(bytes: &[u8]) -> Result<Vec<EnergyReport>> {
    let mut r = csv::Reader::from_reader(bytes);
    if r.headers()?.iter().ne(REPORT_COLUMNS) {
        return Err(LabError::config(format!("unexpected report header {:?}", r.headers()?)));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| LabError::config(format!("bad number {s:?}: {e}")));
    let mut rows = Vec::new();
    for record in r.records() {
        let rec = record?;
        let l2_ux = num(&rec[1])?;
        let mut hm_norms = vec![l2_ux.sqrt()];
        for k in 3..6 {
            hm_norms.push(num(&rec[k])?);
        }
        rows.push(EnergyReport {
            t: num(&rec[0])?,
            l2_ux,
            energy: num(&rec[2])?,
            hm_norms,
            off_manifold: num(&rec[6])?,
            nt_quantity: if rec[7].is_empty() { None } else { Some(num(&rec[7])?) },
        });
    }
    Ok(rows)
}

/// Writes a table of string cells as CSV.
pub fn table_csv<S: AsRef<str>>(header: &[&str], rows: &[Vec<S>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|c| c.as_ref()))?;
    }
    w.into_inner().map_err(|e| LabError::Io(e.into_error()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dcl_core::invariants::energy_report;
    use dcl_core::presets::random_smooth;
    use dcl_core::Manifold;
    use proptest::prelude::*;

    #[test]
    fn report_rows_round_trip() {
        let rows: Vec<EnergyReport> = [Manifold::Sphere2, Manifold::CliffordTorus2]
            .iter()
            .map(|&m| energy_report(0.25, &random_smooth(32, m, 5, 0.5).unwrap()).unwrap())
            .collect();
        let bytes = report_csv(&rows).unwrap();
        assert_eq!(parse_report_csv(&bytes).unwrap(), rows);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("t,l2_ux,E,h1,h2,h3,off_manifold,nt_quantity\n"));
        assert!(text.lines().nth(2).unwrap().ends_with(','), "blank nt_quantity off the sphere");
    }

    #[test]
    fn canonical_json_sorts_keys() {
        #[derive(Serialize)]
        struct S {
            zeta: u8,
            alpha: u8,
        }
        assert_eq!(canonical_json(&S { zeta: 1, alpha: 2 }).unwrap(), "{\n  \"alpha\": 2,\n  \"zeta\": 1\n}\n");
    }

    #[test]
    fn checksum_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    proptest! {
        #[test]
        fn arbitrary_rows_round_trip(
            vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO, 7),
            nt in proptest::option::of(proptest::num::f64::NORMAL),
        ) {
            let l2 = vals[1].abs();
            let row = EnergyReport {
                t: vals[0],
                l2_ux: l2,
                energy: vals[2],
                hm_norms: vec![l2.sqrt(), vals[3], vals[4], vals[5]],
                off_manifold: vals[6],
                nt_quantity: nt,
            };
            let back = parse_report_csv(&report_csv(std::slice::from_ref(&row)).unwrap()).unwrap();
            prop_assert_eq!(back, vec![row]);
        }
    }
}
