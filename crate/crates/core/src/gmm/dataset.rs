use std::io::{Read, Write};

use crate::error::{Error, Result};

/// `N` points of dimension `n`, plus the augmented rows `[x; 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    points: Vec<f64>,
    augmented: Vec<f64>,
}

impl Dataset {
    pub fn from_flat(n: usize, points: Vec<f64>) -> Result<Self> {
        if n == 0 || points.len() % n != 0 {
            return Err(Error::InvalidInput(format!(
                "{} values do not split into rows of length {n}",
                points.len()
            )));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset contains a non-finite value".into()));
        }
        let augmented = points
            .chunks(n)
            .flat_map(|row| row.iter().copied().chain([1.0]))
            .collect();
        Ok(Self { n, points, augmented })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != n) {
            return Err(Error::InvalidInput("ragged dataset rows".into()));
        }
        Self::from_flat(n, rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect())
    }

    /// Number of points `N`.
    pub fn len(&self) -> usize {
        self.points.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point dimension `n`.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    /// `[x_i; 1]`
    pub fn augmented(&self, i: usize) -> &[f64] {
        let m = self.n + 1;
        &self.augmented[i * m..(i + 1) * m]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.points.chunks(self.n)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    /// The dataset concatenated `times` times.
    pub fn repeated(&self, times: usize) -> Self {
        let mut flat = Vec::with_capacity(self.points.len() * times);
        for _ in 0..times {
            flat.extend_from_slice(&self.points);
        }
        Self::from_flat(self.n, flat).expect("repeating a valid dataset stays valid")
    }

    /// One point per row, comma separated, no header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.points() {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(|e| Error::InvalidInput(e.to_string()))?;
            let row = record
                .iter()
                .map(|field| {
                    field
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidInput(format!("row {}: `{field}`: {e}", line + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::InvalidInput("empty dataset".into()));
        }
        Self::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn augmented_rows_end_in_one() {
        let d = Dataset::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.augmented(1), &[3.0, 4.0, 1.0]);
        assert!((0..d.len()).all(|i| d.augmented(i)[2] == 1.0));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = Dataset::from_rows(&[[0.1, -2.5e-7], [std::f64::consts::PI, 1e300]]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn csv_rejects_ragged_and_garbage() {
        assert!(Dataset::read_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("1,x\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("".as_bytes()).is_err());
    }

    #[test]
    fn csv_tolerates_spaces() {
        let d = Dataset::read_csv(" 1, 2 \n3 ,4\n".as_bytes()).unwrap();
        assert_eq!(d.point(1), &[3.0, 4.0]);
    }

    #[test]
    fn bad_shapes_rejected() {
        assert!(Dataset::from_flat(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Dataset::from_flat(0, vec![]).is_err());
        assert!(Dataset::from_flat(1, vec![f64::NAN]).is_err());
    }
}
