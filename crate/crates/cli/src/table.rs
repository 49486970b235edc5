//! CSV serialization of sweep tables. Numbers carry 17 significant digits
//! so every value parses back to the same `f64`.

use std::io::{Read, Write};

use anyhow::{anyhow, bail, Context, Result};

use safetyrace::lab::{ClaimReport, DeltaRow, PlayerRow, SweepRow};

pub const SWEEP_HEADER: [&str; 11] = [
    "axis",
    "scheme",
    "player",
    "sigma",
    "s",
    "p",
    "q",
    "xs",
    "xp",
    "payoff",
    "converged",
];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One line per player per point; `series` is prepended when `labelled`.
pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow], labelled: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = Vec::new();
    if labelled {
        header.push("series");
    }
    header.extend(SWEEP_HEADER);
    w.write_record(&header)?;
    for row in rows {
        for (i, p) in row.players.iter().enumerate() {
            let mut rec = Vec::with_capacity(header.len());
            if labelled {
                rec.push(row.series.clone().unwrap_or_default());
            }
            rec.extend([
                num(row.axis),
                row.scheme.clone(),
                (i + 1).to_string(),
                num(row.sigma),
                num(p.s),
                num(p.p),
                num(p.q),
                num(p.xs),
                num(p.xp),
                num(p.payoff),
                row.converged.to_string(),
            ]);
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_sweep`]. Consecutive lines with the same point key
/// are merged into one row.
pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let labelled = header.get(0) == Some("series");
    let offset = usize::from(labelled);
    let expected: Vec<&str> = header.iter().skip(offset).collect();
    if expected != SWEEP_HEADER {
        bail!("unexpected sweep header: {:?}", header);
    }
    let mut rows: Vec<SweepRow> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| {
            rec.get(k + offset)
                .ok_or_else(|| anyhow!("line {}: missing column {k}", line + 2))
        };
        let float = |k: usize| -> Result<f64> {
            field(k)?.parse().with_context(|| {
                format!(
                    "line {}: bad number in column {}",
                    line + 2,
                    SWEEP_HEADER[k]
                )
            })
        };
        let series = labelled.then(|| rec.get(0).unwrap_or_default().to_string());
        let player: usize = field(2)?.parse()?;
        let axis = float(0)?;
        let scheme = field(1)?.to_string();
        let sigma = float(3)?;
        let converged: bool = field(10)?.parse()?;
        let prow = PlayerRow {
            s: float(4)?,
            p: float(5)?,
            q: float(6)?,
            xs: float(7)?,
            xp: float(8)?,
            payoff: float(9)?,
        };
        match rows.last_mut() {
            Some(last)
                if player == last.players.len() + 1
                    && last.series == series
                    && last.axis.to_bits() == axis.to_bits()
                    && last.scheme == scheme =>
            {
                last.players.push(prow);
            }
            _ if player == 1 => rows.push(SweepRow {
                series,
                axis,
                scheme,
                sigma,
                players: vec![prow],
                converged,
            }),
            _ => bail!("line {}: player {player} out of sequence", line + 2),
        }
    }
    Ok(rows)
}

/// Δσ table; empty cells mark points where either solve did not converge.
pub fn write_delta<W: Write>(out: W, rows: &[DeltaRow], labelled: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["axis", "delta_sigma", "converged"];
    if labelled {
        header.insert(0, "series");
    }
    w.write_record(&header)?;
    for d in rows {
        let mut rec = Vec::new();
        if labelled {
            rec.push(d.series.clone());
        }
        rec.push(num(d.axis));
        rec.push(d.delta_sigma.map(num).unwrap_or_default());
        rec.push(d.converged().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_failures<W: Write>(out: W, report: &ClaimReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["claim", "point", "risk_mode", "players", "diagnostic"])?;
    for f in &report.failures {
        w.write_record([
            report.claim.clone(),
            (f.index + 1).to_string(),
            f.spec.risk_mode.label().to_string(),
            serde_json::to_string(&f.spec.players)?,
            f.diagnostic.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
