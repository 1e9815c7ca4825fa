//! Dense per-token vectors and their text format: a `V D` header line
//! followed by `token x_1 ... x_D` per line.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("vector for `{token}` has {got} components, expected {expected}")]
    Dimension {
        token: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate token `{0}`")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Self {
        Self {
            tokens: Vec::new(),
            index: HashMap::new(),
            dim,
            data: Vec::new(),
        }
    }

    /// Builds a set from row-major `data` with one row per token.
    pub fn from_rows(
        tokens: Vec<String>,
        dim: usize,
        data: Vec<f64>,
    ) -> Result<Self, EmbeddingError> {
        assert_eq!(tokens.len() * dim, data.len(), "row-major data shape");
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(EmbeddingError::Duplicate(t.clone()));
            }
        }
        Ok(Self {
            tokens,
            index,
            dim,
            data,
        })
    }

    pub fn push(&mut self, token: impl Into<String>, v: &[f64]) -> Result<(), EmbeddingError> {
        let token = token.into();
        if v.len() != self.dim {
            return Err(EmbeddingError::Dimension {
                token,
                expected: self.dim,
                got: v.len(),
            });
        }
        if self.index.contains_key(&token) {
            return Err(EmbeddingError::Duplicate(token));
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend_from_slice(v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).map(|i| self.row(i))
    }

    /// Copy with every nonzero row scaled to unit L2 norm.
    pub fn l2_normalized(&self) -> Self {
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.dim.max(1)) {
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
        out
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, t) in self.tokens.iter().enumerate() {
            w.write_all(t.as_bytes())?;
            for x in self.row(i) {
                write!(w, " {x}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbeddingError> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, EmbeddingError> {
        let mut lines = r.lines().enumerate();
        let malformed = |line: usize, message: &str| EmbeddingError::Malformed {
            line,
            message: message.to_string(),
        };
        let (_, header) = lines.next().ok_or_else(|| malformed(1, "missing header"))?;
        let header = header?;
        let mut parts = header.split_whitespace();
        let (Some(v), Some(d), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(malformed(1, "header must be `V D`"));
        };
        let v: usize = v.parse().map_err(|_| malformed(1, "bad vocabulary size"))?;
        let d: usize = d.parse().map_err(|_| malformed(1, "bad dimension"))?;
        let mut set = Self::new(d);
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap().to_string();
            let xs = parts
                .map(|x| x.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| malformed(i + 1, "bad number"))?;
            set.push(token, &xs).map_err(|e| match e {
                EmbeddingError::Dimension { .. } => malformed(i + 1, &e.to_string()),
                e => e,
            })?;
        }
        if set.len() != v {
            return Err(malformed(
                1,
                &format!("header promises {v} vectors, found {}", set.len()),
            ));
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        Self::read(BufReader::new(fs::File::open(path)?))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; `None` if either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    (na > 0.0 && nb > 0.0).then(|| dot(a, b) / (na * nb))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        let mut e = EmbeddingSet::new(3);
        e.push("a", &[0.1, -2.5e-7, 1.0 / 3.0]).unwrap();
        e.push("b", &[0.0, 1e300, -0.0]).unwrap();
        let mut buf = Vec::new();
        e.write(&mut buf).unwrap();
        assert!(buf.starts_with(b"2 3\n"));
        assert_eq!(EmbeddingSet::read(buf.as_slice()).unwrap(), e);
    }

    #[test]
    fn wrong_width_is_rejected() {
        let err = EmbeddingSet::read("1 2\na 1 2 3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EmbeddingError::Malformed { line: 2, .. }));
        let err = EmbeddingSet::read("2 2\na 1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EmbeddingError::Malformed { line: 1, .. }));
    }

    #[test]
    fn cosine_of_zero_is_undefined() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), None);
        assert!((cosine(&[1.0, 1.0], &[2.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
    }
}
