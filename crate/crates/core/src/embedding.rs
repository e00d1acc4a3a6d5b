//! Pre-trained word vectors in the plain-text `.vec` format, bag-of-words
//! document embedding and cosine similarity.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("cannot read embedding table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("embedding table {0} is empty")]
    Empty(String),
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid float {value:?}")]
    BadFloat { line: usize, value: String },
    #[error("vector dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vocab: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Builds a table from (token, vector) pairs. All vectors must share a
    /// length; the first occurrence of a token wins.
    pub fn from_pairs<I>(pairs: I) -> Result<EmbeddingTable, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut dim = None;
        let mut vocab = HashMap::new();
        for (i, (tok, v)) in pairs.into_iter().enumerate() {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d || d == 0 {
                return Err(EmbeddingError::DimensionMismatch {
                    line: i + 1,
                    expected: d,
                    found: v.len(),
                });
            }
            vocab.entry(tok).or_insert(v);
        }
        match dim {
            Some(dim) => Ok(EmbeddingTable { dim, vocab }),
            None => Err(EmbeddingError::Empty("<memory>".into())),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    /// Looks a token up as given, then lowercased.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vocab
            .get(token)
            .or_else(|| self.vocab.get(&token.to_lowercase()))
            .map(Vec::as_slice)
    }

    /// Writes the table in `.vec` format with a header line, tokens sorted.
    pub fn write_vec<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.vocab.len(), self.dim)?;
        let mut tokens: Vec<&String> = self.vocab.keys().collect();
        tokens.sort();
        for t in tokens {
            write!(out, "{t}")?;
            for x in &self.vocab[t] {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Reads a `.vec` file: an optional `<count> <dim>` header, then one token
/// followed by `dim` floats per line.
pub fn load_table(path: &Path) -> Result<EmbeddingTable, EmbeddingError> {
    let display = path.display().to_string();
    let io_err = |source| EmbeddingError::Io {
        path: display.clone(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut dim: Option<usize> = None;
    let mut vocab = HashMap::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(io_err)?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ').filter(|s| !s.is_empty());
        let Some(token) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();

        if line_no == 1 && rest.len() == 1 {
            if let (Ok(_count), Ok(d)) = (token.parse::<usize>(), rest[0].parse::<usize>()) {
                dim = Some(d);
                continue;
            }
        }

        let expected = *dim.get_or_insert(rest.len());
        if rest.len() != expected {
            return Err(EmbeddingError::DimensionMismatch {
                line: line_no,
                expected,
                found: rest.len(),
            });
        }
        let mut v = Vec::with_capacity(expected);
        for s in rest {
            let x: f64 = s.parse().map_err(|_| EmbeddingError::BadFloat {
                line: line_no,
                value: s.to_string(),
            })?;
            v.push(x);
        }
        vocab.entry(token.to_string()).or_insert(v);
    }

    match dim {
        Some(dim) if dim > 0 && !vocab.is_empty() => Ok(EmbeddingTable { dim, vocab }),
        _ => Err(EmbeddingError::Empty(display)),
    }
}

/// Lowercases and splits on whitespace and ASCII punctuation, keeping
/// alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| t.chars().all(char::is_alphanumeric))
        .collect()
}

/// Average of the in-vocabulary token vectors of a text.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub values: Vec<f64>,
    pub token_hits: usize,
}

impl DocVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// No token of the text was in the vocabulary; `values` is all zeros.
    pub fn is_zero_hit(&self) -> bool {
        self.token_hits == 0
    }
}

pub fn embed_text(table: &EmbeddingTable, text: &str) -> DocVector {
    let mut values = vec![0.0; table.dim];
    let mut hits = 0usize;
    for tok in tokenize(text) {
        if let Some(v) = table.get(&tok) {
            for (acc, x) in values.iter_mut().zip(v) {
                *acc += x;
            }
            hits += 1;
        }
    }
    if hits > 0 {
        let n = hits as f64;
        values.iter_mut().for_each(|x| *x /= n);
    }
    DocVector {
        values,
        token_hits: hits,
    }
}

pub fn cosine(u: &DocVector, v: &DocVector) -> Result<f64, EmbeddingError> {
    if u.dim() != v.dim() {
        return Err(EmbeddingError::DimMismatch(u.dim(), v.dim()));
    }
    Ok(cosine_slices(&u.values, &v.values))
}

/// Cosine of two equal-length slices; 0.0 when either has zero norm.
pub fn cosine_slices(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0)
}
