//! `start:stop:step` sweep syntax, inclusive of both endpoints to within
//! half a step; a bare number is a one-point sweep.

use statmech::error::Error;

pub struct Sweep {
    values: Vec<f64>,
}

impl Sweep {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let parts: Vec<&str> = text.split(':').collect();
        let values = match parts.as_slice() {
            [single] => vec![parse_num(single)?],
            [start, stop, step] => {
                let start = parse_num(start)?;
                let stop = parse_num(stop)?;
                let step = parse_num(step)?;
                if step <= 0.0 || stop < start {
                    return Err(Error::Domain(format!(
                        "sweep '{text}': need start <= stop and step > 0"
                    )));
                }
                let count = ((stop - start) / step + 0.5).floor() as usize;
                (0..=count).map(|i| start + i as f64 * step).collect()
            }
            _ => {
                return Err(Error::Domain(format!(
                    "sweep '{text}': expected <value> or start:stop:step"
                )))
            }
        };
        Ok(Self { values })
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}

fn parse_num(tok: &str) -> Result<f64, Error> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| Error::Domain(format!("sweep: cannot parse '{tok}'")))
}
