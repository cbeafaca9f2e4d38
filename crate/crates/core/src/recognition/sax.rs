use statrs::distribution::{ContinuousCDF, Normal};

use super::{RecognizerKind, RecognizerMeta, Series, StateModel};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Equiprobable breakpoints of the standard normal for `alphabet_size` bins.
pub fn sax_breakpoints(alphabet_size: usize) -> Vec<f64> {
    let n = Normal::standard();
    (1..alphabet_size).map(|i| n.inverse_cdf(i as f64 / alphabet_size as f64)).collect()
}

fn bin_levels(alphabet_size: usize) -> Vec<f64> {
    let n = Normal::standard();
    (0..alphabet_size).map(|i| n.inverse_cdf((i as f64 + 0.5) / alphabet_size as f64)).collect()
}

fn symbol_of(z: f64, breakpoints: &[f64]) -> usize {
    breakpoints.iter().take_while(|&&b| b <= z).count()
}

struct Normalized {
    mean: f64,
    std: f64,
    paa: Vec<f64>,
}

fn normalize(series: &Series) -> Result<Normalized> {
    if series.dim() != 1 {
        return Err(Error::invalid("SAX supports univariate series only"));
    }
    if series.len() < series.tau {
        return Err(Error::SeriesTooShort { len: series.len(), tau: series.tau });
    }
    let xs: Vec<f64> = series.values.iter().map(|x| x[0]).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    let paa = xs
        .chunks_exact(series.tau)
        .map(|seg| {
            let avg = seg.iter().sum::<f64>() / seg.len() as f64;
            if std > 0.0 {
                (avg - mean) / std
            } else {
                0.0
            }
        })
        .collect();
    Ok(Normalized { mean, std, paa })
}

fn check_alphabet(alphabet_size: usize) -> Result<()> {
    if !(2..=20).contains(&alphabet_size) {
        return Err(Error::invalid(format!("SAX alphabet size must be in [2, 20], got {alphabet_size}")));
    }
    Ok(())
}

/// SAX symbol of every segment (one PAA average per segment, global z-normalisation).
/// A constant series maps every segment to the middle symbol.
pub fn sax_symbols(series: &Series, alphabet_size: usize) -> Result<Vec<usize>> {
    check_alphabet(alphabet_size)?;
    let norm = normalize(series)?;
    let bps = sax_breakpoints(alphabet_size);
    Ok(norm.paa.iter().map(|&z| symbol_of(z, &bps)).collect())
}

/// One state per symbol, each a constant segment at its bin's mid-quantile,
/// mapped back to the series' original scale.
pub fn fit_sax(series: &Series, alphabet_size: usize) -> Result<StateModel> {
    check_alphabet(alphabet_size)?;
    let norm = normalize(series)?;
    let levels = bin_levels(alphabet_size);
    let patterns = levels
        .iter()
        .map(|z| Tensor::new(series.tau, 1, vec![norm.mean + norm.std * z; series.tau]))
        .collect::<Result<Vec<_>>>()?;
    let meta = RecognizerMeta::Sax {
        alphabet_size,
        breakpoints: sax_breakpoints(alphabet_size),
        levels,
        mean: norm.mean,
        std: norm.std,
    };
    StateModel::new(RecognizerKind::Sax, patterns, meta)
}
