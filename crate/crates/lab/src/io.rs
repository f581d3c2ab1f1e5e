//! Plain-text trajectory files.
//!
//! ```text
//! carleman-trajectory 1
//! dim 2
//! n 15
//! t_final 1e0
//! steps 64
//! scheme trapezoidal
//! system state
//! source separable
//! frame 0
//! <values of frame 0 separated by spaces, enumeration order>
//! frame 1
//! ...
//! ```
//! Floats are written in shortest round-trip exponent form, so reading a
//! file back reproduces every bit.

use std::io::{BufRead, Write};

use carleman_core::solver::{Scheme, System, TimeGrid, Trajectory};
use carleman_core::GridSpec;

use crate::LabError;

const MAGIC: &str = "carleman-trajectory 1";

pub fn write_trajectory(mut w: impl Write, traj: &Trajectory) -> std::io::Result<()> {
    let g = traj.grid();
    let t = traj.time_grid();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "dim {}", g.dim())?;
    writeln!(w, "n {}", g.n())?;
    writeln!(w, "t_final {:e}", t.t_final())?;
    writeln!(w, "steps {}", t.steps())?;
    writeln!(w, "scheme {}", traj.scheme().label())?;
    writeln!(w, "system {}", traj.system().label())?;
    writeln!(w, "source {}", traj.source().replace('\n', " "))?;
    for (m, f) in traj.frames().iter().enumerate() {
        writeln!(w, "frame {m}")?;
        let row: Vec<String> = f.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::iter::Enumerate<std::io::Lines<R>>,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self, what: &str) -> Result<(usize, String), LabError> {
        match self.inner.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(fail(i + 1, e.to_string())),
            None => Err(fail(0, format!("unexpected end of file, expected {what}"))),
        }
    }

    /// A `key value` line; returns the line number and the value.
    fn field(&mut self, key: &str) -> Result<(usize, String), LabError> {
        let (i, l) = self.next(key)?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok((i, v.to_string())),
            _ if l == key => Ok((i, String::new())),
            _ => Err(fail(i, format!("expected `{key} <value>`"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, LabError>
    where
        T::Err: std::fmt::Display,
    {
        let (i, v) = self.field(key)?;
        v.trim().parse().map_err(|e: T::Err| fail(i, format!("{key}: {e}")))
    }
}

fn fail(line: usize, reason: String) -> LabError {
    LabError::Format { line, reason }
}

pub fn read_trajectory(r: impl BufRead) -> Result<Trajectory, LabError> {
    let mut lines = Lines { inner: r.lines().enumerate() };
    let (i, magic) = lines.next("header")?;
    if magic.trim() != MAGIC {
        return Err(fail(i, format!("expected `{MAGIC}`")));
    }
    let dim: usize = lines.parsed("dim")?;
    let n: usize = lines.parsed("n")?;
    let t_final: f64 = lines.parsed("t_final")?;
    let steps: usize = lines.parsed("steps")?;
    let (i, sc) = lines.field("scheme")?;
    let scheme = [Scheme::Trapezoidal, Scheme::BackwardEuler]
        .into_iter()
        .find(|s| s.label() == sc.trim())
        .ok_or_else(|| fail(i, format!("unknown scheme `{sc}`")))?;
    let (i, sy) = lines.field("system")?;
    let system = [System::State, System::Derivative]
        .into_iter()
        .find(|s| s.label() == sy.trim())
        .ok_or_else(|| fail(i, format!("unknown system `{sy}`")))?;
    let (_, source) = lines.field("source")?;
    let grid = GridSpec::new(dim, n)?;
    let time = TimeGrid::new(t_final, steps)?;
    let mut frames = Vec::with_capacity(steps + 1);
    for m in 0..=steps {
        let (i, idx) = lines.field("frame")?;
        if idx.trim() != m.to_string() {
            return Err(fail(i, format!("expected frame {m}")));
        }
        let (i, row) = lines.next("frame values")?;
        let values = row
            .split_ascii_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| fail(i, format!("`{v}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != grid.primal_len() {
            return Err(fail(i, format!("{} values, mesh holds {}", values.len(), grid.primal_len())));
        }
        frames.push(values);
    }
    Ok(Trajectory::from_frames(grid, time, scheme, system, source, frames)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use carleman_core::solver::{solve_forward, FieldForcing};
    use carleman_core::synthetic::{random_coefficients, random_source, run_rng};
    use carleman_core::MeshFunction;

    fn sample() -> Trajectory {
        let g = GridSpec::new(2, 5).unwrap();
        let mut rng = run_rng(1, 2);
        let c = random_coefficients(&mut rng, g, 0.7, true, true).unwrap();
        let f = FieldForcing::new(random_source(&mut rng, 2, 2));
        let y0 = MeshFunction::from_fn(g, g.primal(), |x| (x[0] * 3.1).sin() * 1e-300 + x[1]).unwrap();
        solve_forward(&y0, &f, &c, &TimeGrid::new(0.7, 6).unwrap(), Scheme::Trapezoidal).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let tr = sample();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &tr).unwrap();
        let back = read_trajectory(buf.as_slice()).unwrap();
        assert_eq!(back.grid(), tr.grid());
        assert_eq!(back.time_grid(), tr.time_grid());
        assert_eq!(back.scheme(), tr.scheme());
        assert_eq!(back.source(), tr.source());
        for (a, b) in back.frames().iter().zip(tr.frames()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        let mut again = Vec::new();
        write_trajectory(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn truncated_files_are_rejected() {
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(12).collect::<Vec<_>>().join("\n");
        assert!(matches!(read_trajectory(cut.as_bytes()), Err(LabError::Format { .. })));
        let bad = text.replacen("dim 2", "dim two", 1);
        assert!(matches!(read_trajectory(bad.as_bytes()), Err(LabError::Format { line: 2, .. })));
    }
}
