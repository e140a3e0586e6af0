use std::path::PathBuf;

use clap::Args;
use permnet::Permutation;

use crate::commands::CliError;

#[derive(Args, Debug, Clone, Default)]
pub struct PermArgs {
    /// Permutation in 1-based cycle notation or as a one-line image.
    /// Repeat to give several generators. `""` or `()` is the identity.
    #[arg(long = "perm", value_name = "SPEC", allow_hyphen_values = true)]
    pub perms: Vec<String>,
    /// File holding one permutation per non-empty line.
    #[arg(long, value_name = "PATH")]
    pub perm_file: Option<PathBuf>,
    /// `AxB`: A cycles of length B over consecutive labels (rows of an A×B image).
    #[arg(long, value_name = "AxB", value_parser = parse_cycle_type)]
    pub cycle_type: Option<(usize, usize)>,
    /// Size of the ground set; inferred from the permutation when omitted.
    #[arg(long)]
    pub n: Option<usize>,
}

fn parse_cycle_type(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected AxB, got `{text}`"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad cycle count `{a}`"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad cycle length `{b}`"))?;
    if a == 0 || b == 0 {
        return Err("cycle count and length must be positive".into());
    }
    Ok((a, b))
}

/// Largest label in cycle text, or the token count of a one-line image.
fn inferred_n(text: &str) -> usize {
    let labels = text
        .split(|c: char| !c.is_ascii_digit())
        .filter_map(|t| t.parse::<usize>().ok());
    if text.contains('(') {
        labels.max().unwrap_or(0)
    } else {
        labels.count()
    }
}

impl PermArgs {
    /// Every generator given, all acting on the same `[n]`.
    pub fn generators(&self) -> Result<Vec<Permutation>, CliError> {
        let mut texts = self.perms.clone();
        if let Some(path) = &self.perm_file {
            let body = std::fs::read_to_string(path)
                .map_err(|e| permnet::Error::Io(format!("{}: {e}", path.display())))?;
            texts.extend(body.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned));
        }
        let mut gens = Vec::new();
        if let Some((a, b)) = self.cycle_type {
            if self.n.is_some_and(|n| n != a * b) {
                return Err(CliError::Usage(format!("--cycle-type {a}x{b} acts on {} labels, --n says {}", a * b, self.n.unwrap())));
            }
            gens.push(Permutation::cycle_type(a, b));
        }
        let n = match (self.n, gens.first()) {
            (Some(n), _) => n,
            (None, Some(g)) => g.n(),
            (None, None) => texts.iter().map(|t| inferred_n(t)).max().unwrap_or(0),
        };
        for t in &texts {
            gens.push(Permutation::parse(t, n)?);
        }
        if gens.is_empty() {
            return Err(CliError::Usage("give a permutation with --perm, --perm-file or --cycle-type".into()));
        }
        if n == 0 {
            return Err(CliError::Usage("cannot infer n from an empty permutation; pass --n".into()));
        }
        Ok(gens)
    }

    /// Exactly one permutation.
    pub fn single(&self) -> Result<Permutation, CliError> {
        let mut gens = self.generators()?;
        if gens.len() != 1 {
            return Err(CliError::Usage(format!(
                "this command takes one permutation, got {}",
                gens.len()
            )));
        }
        Ok(gens.remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_type_shorthand() {
        assert_eq!(parse_cycle_type("28x28"), Ok((28, 28)));
        assert_eq!(parse_cycle_type("3X4"), Ok((3, 4)));
        assert!(parse_cycle_type("28").is_err());
        assert!(parse_cycle_type("0x3").is_err());
    }

    #[test]
    fn n_inference() {
        assert_eq!(inferred_n("(1 4 3 2)(5 8 7 6)"), 8);
        assert_eq!(inferred_n("2 3 1"), 3);
        assert_eq!(inferred_n(""), 0);
    }
}
