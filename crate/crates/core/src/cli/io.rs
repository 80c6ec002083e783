use super::CliError;
use std::fs;
use std::path::Path;

/// Galaxy velocities in units of 1000 km/s, shipped with the crate.
pub const GALAXY_CSV: &str = include_str!("../../data/galaxy.csv");

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load_scalar_csv(path: &Path) -> Result<Vec<f64>, CliError> {
    parse_scalar_csv(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// One numeric column; a non-numeric first line is taken as a header.
pub fn parse_scalar_csv(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.contains(',') {
            return Err(format!("line {}: expected a single column", i + 1));
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(v) => return Err(format!("line {}: non-finite value {v}", i + 1)),
            Err(_) if out.is_empty() && i == 0 => {}
            Err(_) => return Err(format!("line {}: cannot parse '{line}'", i + 1)),
        }
    }
    if out.is_empty() {
        return Err("no observations".into());
    }
    Ok(out)
}

/// Genotypes as allele counts per locus, with the locus layout read from the
/// header.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeData {
    pub loci: Vec<String>,
    pub alleles: Vec<usize>,
    pub rows: Vec<Vec<u8>>,
}

impl GenotypeData {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let mut head = Vec::new();
        for (name, &j) in self.loci.iter().zip(&self.alleles) {
            head.extend((1..=j).map(|a| format!("{name}_{a}")));
        }
        s.push_str(&head.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

pub fn load_genotype_csv(path: &Path) -> Result<GenotypeData, CliError> {
    parse_genotype_csv(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Wide layout: one row per individual, one column per allele, with headers
/// `<locus>_<allele>` so that consecutive columns sharing a locus prefix form
/// one locus. An optional leading `id` column is ignored. Each locus block must
/// sum to 2, or to 0 for a missing genotype.
pub fn parse_genotype_csv(text: &str) -> Result<GenotypeData, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("empty file")?;
    let mut cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let skip_id = cols.first().is_some_and(|c| c.eq_ignore_ascii_case("id"));
    if skip_id {
        cols.remove(0);
    }
    let mut loci: Vec<String> = Vec::new();
    let mut alleles: Vec<usize> = Vec::new();
    for c in &cols {
        let (locus, _) = c.rsplit_once('_').ok_or_else(|| format!("column '{c}' is not named <locus>_<allele>"))?;
        if loci.last().map(String::as_str) == Some(locus) {
            *alleles.last_mut().expect("locus present") += 1;
        } else {
            if loci.iter().any(|l| l == locus) {
                return Err(format!("columns of locus '{locus}' are not contiguous"));
            }
            loci.push(locus.to_string());
            alleles.push(1);
        }
    }
    if loci.is_empty() {
        return Err("no allele columns".into());
    }
    if let Some(l) = alleles.iter().position(|&j| j < 2) {
        return Err(format!("locus '{}' has a single allele column", loci[l]));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if skip_id && !fields.is_empty() {
            fields.remove(0);
        }
        if fields.len() != cols.len() {
            return Err(format!("row {}: {} fields, expected {}", i + 1, fields.len(), cols.len()));
        }
        let row: Vec<u8> = fields
            .iter()
            .map(|f| f.parse::<u8>().map_err(|_| format!("row {}: cannot parse allele count '{f}'", i + 1)))
            .collect::<Result<_, _>>()?;
        let mut off = 0;
        for (name, &j) in loci.iter().zip(&alleles) {
            let s: u32 = row[off..off + j].iter().map(|&v| v as u32).sum();
            if s != 2 && s != 0 {
                return Err(format!("row {}, locus '{name}': allele counts sum to {s}, expected 2 (or 0 if missing)", i + 1));
            }
            off += j;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no individuals".into());
    }
    Ok(GenotypeData { loci, alleles, rows })
}
