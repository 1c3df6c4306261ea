//! Trace serialization: a columnar CSV per chain plus a bit-packed binary
//! configuration file with a 16-byte header (magic, version, P, T).
//!
//! CSV dialect: comma separator, '.' decimal point, header row, UTF-8, LF
//! line endings. Floats are written with Rust's shortest round-trip
//! formatting, so a written trace re-reads bit-identically on one build.
//! The swap acceptance column is empty on iterations where no swap was
//! attempted (empty swappable set), keeping no-ops distinguishable from
//! rejections.

use std::io::{self, BufRead, Read, Write};

use crate::error::{CoreError, Result};
use crate::linsampler::ChainTrace;
use crate::rjmcmc::RjTrace;

/// Magic bytes of the binary configuration format.
pub const CONFIG_MAGIC: [u8; 4] = *b"SPCB";
/// Current binary format version.
pub const CONFIG_VERSION: u32 = 1;

/// Writes the per-iteration columnar CSV of a linear-sampler trace.
pub fn write_chain_csv<W: Write>(trace: &ChainTrace, w: &mut W) -> io::Result<()> {
    writeln!(w, "iteration,dH,flip_acc,swap_acc,lambda,log_post,model_size")?;
    for t in 0..trace.len() {
        let swap = if trace.swap_attempted[t] {
            if trace.swap_accepted[t] { "1" } else { "0" }
        } else {
            ""
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            t + 1,
            trace.hamming_jump[t],
            u8::from(trace.flip_accepted[t]),
            swap,
            trace.lambda[t],
            trace.log_post[t],
            trace.model_size_at(t)
        )?;
    }
    Ok(())
}

/// Columns parsed back from a chain CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedChainCsv {
    pub hamming_jump: Vec<u8>,
    pub flip_accepted: Vec<bool>,
    pub swap_attempted: Vec<bool>,
    pub swap_accepted: Vec<bool>,
    pub lambda: Vec<f64>,
    pub log_post: Vec<f64>,
    pub model_size: Vec<usize>,
}

fn csv_error(line: usize, msg: impl Into<String>) -> CoreError {
    CoreError::eval("read_chain_csv", format!("line {line}: {}", msg.into()))
}

/// Reads a chain CSV written by [`write_chain_csv`].
pub fn read_chain_csv<R: BufRead>(r: R) -> Result<ParsedChainCsv> {
    let mut out = ParsedChainCsv {
        hamming_jump: vec![],
        flip_accepted: vec![],
        swap_attempted: vec![],
        swap_accepted: vec![],
        lambda: vec![],
        log_post: vec![],
        model_size: vec![],
    };
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| csv_error(lineno + 1, e.to_string()))?;
        if lineno == 0 {
            if line != "iteration,dH,flip_acc,swap_acc,lambda,log_post,model_size" {
                return Err(csv_error(1, format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(csv_error(lineno + 1, format!("expected 7 fields, got {}", fields.len())));
        }
        out.hamming_jump.push(
            fields[1].parse().map_err(|e| csv_error(lineno + 1, format!("dH: {e}")))?,
        );
        out.flip_accepted.push(fields[2] == "1");
        match fields[3] {
            "" => {
                out.swap_attempted.push(false);
                out.swap_accepted.push(false);
            }
            "0" => {
                out.swap_attempted.push(true);
                out.swap_accepted.push(false);
            }
            "1" => {
                out.swap_attempted.push(true);
                out.swap_accepted.push(true);
            }
            other => return Err(csv_error(lineno + 1, format!("swap_acc: {other:?}"))),
        }
        out.lambda.push(
            fields[4].parse().map_err(|e| csv_error(lineno + 1, format!("lambda: {e}")))?,
        );
        out.log_post.push(
            fields[5].parse().map_err(|e| csv_error(lineno + 1, format!("log_post: {e}")))?,
        );
        out.model_size.push(
            fields[6].parse().map_err(|e| csv_error(lineno + 1, format!("model_size: {e}")))?,
        );
    }
    Ok(out)
}

/// Writes the bit-packed configuration stream: 16-byte header (magic,
/// version, bit count P, row count T), then ceil(P/8) bytes per row,
/// LSB-first within each byte.
pub fn write_configs_bin<W: Write>(
    bits: usize,
    words_per_row: usize,
    packed_words: &[u64],
    w: &mut W,
) -> io::Result<()> {
    assert_eq!(packed_words.len() % words_per_row.max(1), 0);
    let rows = if words_per_row == 0 { 0 } else { packed_words.len() / words_per_row };
    w.write_all(&CONFIG_MAGIC)?;
    w.write_all(&CONFIG_VERSION.to_le_bytes())?;
    w.write_all(&(bits as u32).to_le_bytes())?;
    w.write_all(&(rows as u32).to_le_bytes())?;
    let bytes_per_row = bits.div_ceil(8);
    let mut buf = vec![0u8; bytes_per_row];
    for r in 0..rows {
        let row = &packed_words[r * words_per_row..(r + 1) * words_per_row];
        buf.fill(0);
        for (b, byte) in buf.iter_mut().enumerate() {
            let word = row[b / 8];
            *byte = ((word >> ((b % 8) * 8)) & 0xff) as u8;
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Parsed binary configuration stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfigs {
    pub bits: usize,
    pub rows: usize,
    pub words_per_row: usize,
    pub packed_words: Vec<u64>,
}

/// Reads a configuration stream written by [`write_configs_bin`].
pub fn read_configs_bin<R: Read>(r: &mut R) -> Result<ParsedConfigs> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|e| CoreError::eval("read_configs_bin", format!("header: {e}")))?;
    if header[0..4] != CONFIG_MAGIC {
        return Err(CoreError::eval("read_configs_bin", "bad magic bytes"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != CONFIG_VERSION {
        return Err(CoreError::eval(
            "read_configs_bin",
            format!("unsupported version {version}"),
        ));
    }
    let bits = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let rows = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let bytes_per_row = bits.div_ceil(8);
    let words_per_row = bits.div_ceil(64);
    let mut packed_words = vec![0u64; rows * words_per_row];
    let mut buf = vec![0u8; bytes_per_row];
    for row in 0..rows {
        r.read_exact(&mut buf)
            .map_err(|e| CoreError::eval("read_configs_bin", format!("row {row}: {e}")))?;
        let words = &mut packed_words[row * words_per_row..(row + 1) * words_per_row];
        for (b, &byte) in buf.iter().enumerate() {
            words[b / 8] |= (byte as u64) << ((b % 8) * 8);
        }
    }
    Ok(ParsedConfigs {
        bits,
        rows,
        words_per_row,
        packed_words,
    })
}

/// Writes the reversible-jump trace CSV: the linear columns extended with
/// per-category acceptance flags, swap flags, λ values and intercepts.
pub fn write_rj_csv<W: Write>(trace: &RjTrace, w: &mut W) -> io::Result<()> {
    let j = trace.categories;
    write!(w, "iteration,log_post,model_size,beta0_acc")?;
    for c in 0..j {
        write!(w, ",cat_acc_{c}")?;
    }
    for c in 0..j {
        write!(w, ",swap_acc_{c}")?;
    }
    for c in 0..j {
        write!(w, ",lambda_{c}")?;
    }
    for c in 0..j {
        write!(w, ",beta0_{c}")?;
    }
    writeln!(w)?;
    for t in 0..trace.len() {
        write!(
            w,
            "{},{},{},{}",
            t + 1,
            trace.log_post[t],
            trace.model_size_at(t),
            u8::from(trace.beta0_accepted[t])
        )?;
        for c in 0..j {
            write!(w, ",{}", u8::from(trace.cat_accepted[t * j + c]))?;
        }
        for c in 0..j {
            let cell = if trace.swap_attempted[t * j + c] {
                if trace.swap_accepted[t * j + c] { "1" } else { "0" }
            } else {
                ""
            };
            write!(w, ",{cell}")?;
        }
        for c in 0..j {
            write!(w, ",{}", trace.lambda[t * j + c])?;
        }
        for c in 0..j {
            write!(w, ",{}", trace.beta0[t * j + c])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjlinear::{DissimKind, LinearProblem};
    use crate::linsampler::{run_chain, SamplerConfig};
    use crate::numcore::rng::RngSeed;
    use crate::synthgen::{gen_linear, LinearSynthConfig};

    fn sample_trace() -> ChainTrace {
        let data = gen_linear(&LinearSynthConfig {
            n: 30,
            p: 5,
            n_active: 2,
            rho: 0.4,
            sigma2: 1.0,
            seed: RngSeed(17),
        })
        .unwrap();
        let problem = LinearProblem::with_default_priors(data.x, data.y).unwrap();
        let (graph, _) = crate::localmove::estimate_graph(problem.design(), 0.2).unwrap();
        let mut config = SamplerConfig::new(60, 10, DissimKind::FTest, RngSeed(4));
        config.swap_enabled = true;
        run_chain(&problem, Some(&graph), &config).unwrap()
    }

    #[test]
    fn chain_csv_roundtrip_is_exact() {
        let trace = sample_trace();
        let mut buf = Vec::new();
        write_chain_csv(&trace, &mut buf).unwrap();
        let parsed = read_chain_csv(buf.as_slice()).unwrap();
        assert_eq!(parsed.flip_accepted, trace.flip_accepted);
        assert_eq!(parsed.swap_attempted, trace.swap_attempted);
        assert_eq!(parsed.swap_accepted, trace.swap_accepted);
        assert_eq!(parsed.hamming_jump, trace.hamming_jump);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&parsed.lambda), bits(&trace.lambda));
        assert_eq!(bits(&parsed.log_post), bits(&trace.log_post));
        for (t, &m) in parsed.model_size.iter().enumerate() {
            assert_eq!(m, trace.model_size_at(t));
        }
    }

    #[test]
    fn configs_bin_roundtrip_is_exact() {
        let trace = sample_trace();
        let mut buf = Vec::new();
        write_configs_bin(trace.num_predictors, trace.words_per_config, &trace.configs, &mut buf)
            .unwrap();
        assert_eq!(buf.len(), 16 + trace.len() * trace.num_predictors.div_ceil(8));
        let parsed = read_configs_bin(&mut buf.as_slice()).unwrap();
        assert_eq!(parsed.bits, trace.num_predictors);
        assert_eq!(parsed.rows, trace.len());
        assert_eq!(parsed.packed_words, trace.configs);
    }

    #[test]
    fn corrupted_header_is_rejected() {
        let trace = sample_trace();
        let mut buf = Vec::new();
        write_configs_bin(trace.num_predictors, trace.words_per_config, &trace.configs, &mut buf)
            .unwrap();
        buf[0] = b'X';
        assert!(read_configs_bin(&mut buf.as_slice()).is_err());
        let mut buf2 = Vec::new();
        write_configs_bin(trace.num_predictors, trace.words_per_config, &trace.configs, &mut buf2)
            .unwrap();
        buf2[4] = 99;
        assert!(read_configs_bin(&mut buf2.as_slice()).is_err());
    }

    #[test]
    fn identical_runs_serialize_byte_identically() {
        let a = sample_trace();
        let b = sample_trace();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        write_chain_csv(&a, &mut buf_a).unwrap();
        write_chain_csv(&b, &mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        let mut bin_a = Vec::new();
        let mut bin_b = Vec::new();
        write_configs_bin(a.num_predictors, a.words_per_config, &a.configs, &mut bin_a).unwrap();
        write_configs_bin(b.num_predictors, b.words_per_config, &b.configs, &mut bin_b).unwrap();
        assert_eq!(bin_a, bin_b);
    }
}
