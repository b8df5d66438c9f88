//! Compression-ratio-to-distortion mapping.
//!
//! The relationship between a semantic compressor's ratio and its
//! reconstruction loss is measured offline; the resulting table is fixed
//! before the allocator runs. The table stores ratios in the measured
//! orientation, original dimension over latent dimension (>= 1), while the
//! allocation interface works with `o = dim(latent) / dim(original)` in
//! (0, 1]; the two are reciprocal. Lookups between table points interpolate
//! linearly in log ratio, since the measured ratios are geometrically
//! spaced. `o = 1` is lossless by definition.

use std::path::Path;

use crate::error::{invalid, Error, Result};

/// One measured operating point of the compressor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    /// dim(original) / dim(latent), >= 1.
    pub ratio: f64,
    /// Latent dimensionality at this point.
    pub latent_dimension: u32,
    /// Reconstruction MSE at this point.
    pub mse_loss: f64,
}

/// The compression ratio chosen for a user together with the reconstruction
/// noise it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionChoice {
    /// dim(latent) / dim(original), in (0, 1].
    pub ratio_o: f64,
    /// Standard deviation of the reconstruction noise, `sqrt(mse)`.
    pub sem_std: f64,
}

/// Measured ratio-to-loss table, sorted by descending ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionTable {
    entries: Vec<TableEntry>,
}

/// Operating points of the convolutional autoencoder measured on 3072-dim
/// image data, most aggressive first.
const DEFAULT_ENTRIES: [(f64, u32, f64); 14] = [
    (192.0, 16, 0.799),
    (96.0, 32, 0.539),
    (48.0, 64, 0.337),
    (32.0, 96, 0.249),
    (24.0, 128, 0.193),
    (16.0, 192, 0.131),
    (12.0, 256, 0.098),
    (10.0, 312, 0.079),
    (9.0, 341, 0.069),
    (8.0, 384, 0.060),
    (6.0, 576, 0.034),
    (4.0, 768, 0.020),
    (3.0, 1152, 0.017),
    (2.0, 1536, 0.015),
];

impl CompressionTable {
    /// The built-in measured table.
    pub fn default_table() -> Self {
        let entries = DEFAULT_ENTRIES
            .iter()
            .map(|&(ratio, latent_dimension, mse_loss)| TableEntry {
                ratio,
                latent_dimension,
                mse_loss,
            })
            .collect();
        Self::from_entries(entries).expect("built-in table is valid")
    }

    /// Builds a table from entries, sorting by descending ratio and
    /// validating monotonicity (more compression never loses less).
    pub fn from_entries(mut entries: Vec<TableEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("entries", "table must be nonempty"));
        }
        for (i, e) in entries.iter().enumerate() {
            if !(e.ratio > 1.0 && e.ratio.is_finite()) {
                return Err(invalid("entries", format!("row {i}: ratio must be > 1")));
            }
            if !(0.0..=1.0).contains(&e.mse_loss) {
                return Err(invalid("entries", format!("row {i}: mse must lie in [0, 1]")));
            }
            if e.latent_dimension == 0 {
                return Err(invalid("entries", format!("row {i}: latent dimension must be > 0")));
            }
        }
        entries.sort_by(|a, b| b.ratio.partial_cmp(&a.ratio).unwrap());
        for pair in entries.windows(2) {
            if pair[0].ratio == pair[1].ratio {
                return Err(invalid("entries", "duplicate ratio in table"));
            }
            if pair[0].mse_loss <= pair[1].mse_loss {
                return Err(invalid(
                    "entries",
                    format!(
                        "loss must strictly decrease with ratio: {} -> {}, {} -> {}",
                        pair[0].ratio, pair[0].mse_loss, pair[1].ratio, pair[1].mse_loss
                    ),
                ));
            }
        }
        Ok(Self { entries })
    }

    /// Loads a table from a plain-text file with one `ratio latent_dim mse`
    /// row per line. Blank lines and lines starting with `#` are skipped;
    /// fields may be separated by whitespace or commas.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if fields.len() != 3 {
                return Err(invalid(
                    "table file",
                    format!("{}:{}: expected 3 fields, got {}", path.display(), lineno + 1, fields.len()),
                ));
            }
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    invalid(
                        "table file",
                        format!("{}:{}: bad {what} `{s}`", path.display(), lineno + 1),
                    )
                })
            };
            entries.push(TableEntry {
                ratio: parse(fields[0], "ratio")?,
                latent_dimension: parse(fields[1], "latent dimension")? as u32,
                mse_loss: parse(fields[2], "mse")?,
            });
        }
        Self::from_entries(entries)
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    /// Largest measured ratio, i.e. the most aggressive operating point.
    pub fn max_ratio(&self) -> f64 {
        self.entries[0].ratio
    }

    /// Smallest representable `o`: the reciprocal of the largest ratio.
    pub fn min_o(&self) -> f64 {
        1.0 / self.max_ratio()
    }

    /// Reconstruction MSE (a variance) at compression ratio `o` in (0, 1].
    ///
    /// Exact at table points, log-linear interpolation between them, zero at
    /// `o = 1`, clamped to the most aggressive measurement beyond it.
    pub fn distortion_for_ratio(&self, o: f64) -> Result<f64> {
        if !(o > 0.0 && o <= 1.0) {
            return Err(invalid("o", format!("compression ratio must lie in (0, 1], got {o}")));
        }
        let r = 1.0 / o;
        if r >= self.max_ratio() {
            return Ok(self.entries[0].mse_loss);
        }
        // Walk from aggressive to mild; entries are sorted by descending
        // ratio, with (1, 0) as the implicit lossless endpoint.
        let mut upper = (self.entries[0].ratio, self.entries[0].mse_loss);
        for e in &self.entries {
            if r >= e.ratio {
                break;
            }
            upper = (e.ratio, e.mse_loss);
        }
        let lower = self
            .entries
            .iter()
            .find(|e| e.ratio <= r)
            .map(|e| (e.ratio, e.mse_loss))
            .unwrap_or((1.0, 0.0));
        if (r - lower.0).abs() < 1e-12 {
            return Ok(lower.1);
        }
        if (r - upper.0).abs() < 1e-12 {
            return Ok(upper.1);
        }
        let t = (r.ln() - lower.0.ln()) / (upper.0.ln() - lower.0.ln());
        Ok(lower.1 + t * (upper.1 - lower.1))
    }

    /// Reconstruction noise standard deviation at ratio `o`.
    pub fn sem_std_for_ratio(&self, o: f64) -> Result<f64> {
        Ok(self.distortion_for_ratio(o)?.sqrt())
    }

    /// Most aggressive table choice whose noise std does not exceed
    /// `target_std`; falls back to lossless `o = 1` when none qualifies.
    pub fn nearest_feasible_ratio(&self, target_std: f64) -> CompressionChoice {
        for e in &self.entries {
            let std = e.mse_loss.sqrt();
            if std <= target_std {
                return CompressionChoice {
                    ratio_o: 1.0 / e.ratio,
                    sem_std: std,
                };
            }
        }
        CompressionChoice {
            ratio_o: 1.0,
            sem_std: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_points_are_exact() {
        let t = CompressionTable::default_table();
        assert_eq!(t.distortion_for_ratio(1.0 / 192.0).unwrap(), 0.799);
        assert_eq!(t.distortion_for_ratio(1.0 / 48.0).unwrap(), 0.337);
        assert_eq!(t.distortion_for_ratio(1.0 / 2.0).unwrap(), 0.015);
        assert_eq!(t.distortion_for_ratio(1.0).unwrap(), 0.0);
    }

    #[test]
    fn sem_std_is_root_of_mse() {
        let t = CompressionTable::default_table();
        assert!((t.sem_std_for_ratio(1.0 / 192.0).unwrap() - 0.89387).abs() < 1e-4);
        assert!((t.sem_std_for_ratio(1.0 / 48.0).unwrap() - 0.58052).abs() < 1e-4);
        assert_eq!(t.sem_std_for_ratio(1.0).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_rejected() {
        let t = CompressionTable::default_table();
        assert!(t.distortion_for_ratio(0.0).is_err());
        assert!(t.distortion_for_ratio(-0.5).is_err());
        assert!(t.distortion_for_ratio(1.5).is_err());
    }

    #[test]
    fn beyond_table_clamps() {
        let t = CompressionTable::default_table();
        assert_eq!(t.distortion_for_ratio(1.0 / 400.0).unwrap(), 0.799);
    }

    #[test]
    fn inverse_lookup() {
        let t = CompressionTable::default_table();
        let c = t.nearest_feasible_ratio(0.9);
        assert_eq!(c.ratio_o, 1.0 / 192.0);
        let c = t.nearest_feasible_ratio(0.0);
        assert_eq!(c.ratio_o, 1.0);
        assert_eq!(c.sem_std, 0.0);
        // First entry whose std fits 0.2 when scanning from aggressive to
        // mild is ratio 6 (sqrt(0.034) ~ 0.184).
        let c = t.nearest_feasible_ratio(0.2);
        assert_eq!(c.ratio_o, 1.0 / 6.0);
        assert!((c.sem_std - 0.034f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn round_trip_through_inverse() {
        let t = CompressionTable::default_table();
        for e in t.entries() {
            let std = t.sem_std_for_ratio(1.0 / e.ratio).unwrap();
            let c = t.nearest_feasible_ratio(std);
            assert!(c.sem_std <= std + 1e-12);
        }
    }

    #[test]
    fn rejects_non_monotone_table() {
        let entries = vec![
            TableEntry { ratio: 4.0, latent_dimension: 10, mse_loss: 0.1 },
            TableEntry { ratio: 2.0, latent_dimension: 20, mse_loss: 0.2 },
        ];
        assert!(CompressionTable::from_entries(entries).is_err());
    }

    #[test]
    fn loads_from_text_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.txt");
        std::fs::write(&path, "# ratio latent mse\n4 768 0.020\n2, 1536, 0.015\n\n").unwrap();
        let t = CompressionTable::from_path(&path).unwrap();
        assert_eq!(t.entries().len(), 2);
        assert_eq!(t.max_ratio(), 4.0);

        std::fs::write(&path, "4 768\n").unwrap();
        assert!(CompressionTable::from_path(&path).is_err());
        assert!(CompressionTable::from_path(&dir.path().join("missing.txt")).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_o(o1 in 0.0052f64..1.0, o2 in 0.0052f64..1.0) {
            let t = CompressionTable::default_table();
            let (lo, hi) = if o1 <= o2 { (o1, o2) } else { (o2, o1) };
            let d_lo = t.distortion_for_ratio(lo).unwrap();
            let d_hi = t.distortion_for_ratio(hi).unwrap();
            prop_assert!(d_lo >= d_hi - 1e-12);
        }

        #[test]
        fn interpolation_is_bracketed(o in 0.006f64..0.99) {
            let t = CompressionTable::default_table();
            let r = 1.0 / o;
            let d = t.distortion_for_ratio(o).unwrap();
            // Neighboring measured points, with (1, 0) as the mild endpoint.
            let above = t.entries().iter().rev().find(|e| e.ratio >= r)
                .map(|e| e.mse_loss).unwrap_or(t.entries()[0].mse_loss);
            let below = t.entries().iter().find(|e| e.ratio <= r)
                .map(|e| e.mse_loss).unwrap_or(0.0);
            prop_assert!(d >= below - 1e-12 && d <= above + 1e-12);
        }
    }
}
