//! Parsers for the small textual argument formats: lattice points
//! `"i,j"`, point lists `"(0,0),(1,0),(0,1)"`, and integer lists `"1,2,4"`.
//! Parentheses and whitespace are decorative; only the signed integers and
//! their order matter.

use shiftlab_core::geometry::{pt, LatticePoint};

/// Extracts the signed integers of `s` in order.
fn integers(s: &str) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if ch.is_ascii_digit() || (ch == '-' && cur.is_empty()) {
            cur.push(ch);
        } else if ch == '(' || ch == ')' || ch == ',' || ch == ';' || ch.is_whitespace() {
            if !cur.is_empty() {
                out.push(cur.parse().map_err(|_| format!("bad integer {cur:?}"))?);
                cur.clear();
            }
        } else {
            return Err(format!("unexpected character {ch:?} in {s:?}"));
        }
    }
    if !cur.is_empty() {
        out.push(cur.parse().map_err(|_| format!("bad integer {cur:?}"))?);
    }
    Ok(out)
}

/// A list of lattice points, e.g. `"(0,0),(1,0),(0,1)"`.
pub fn points(s: &str) -> Result<Vec<LatticePoint>, String> {
    let ints = integers(s)?;
    if ints.is_empty() || ints.len() % 2 != 0 {
        return Err(format!(
            "expected pairs \"(i,j),(i,j),...\", got {} integers in {s:?}",
            ints.len()
        ));
    }
    Ok(ints.chunks(2).map(|c| pt(c[0], c[1])).collect())
}

/// A single lattice point, e.g. `"1,0"` or `"(1,0)"`.
pub fn point(s: &str) -> Result<LatticePoint, String> {
    let pts = points(s)?;
    if pts.len() != 1 {
        return Err(format!("expected a single \"i,j\" pair, got {s:?}"));
    }
    Ok(pts[0])
}

/// A comma-separated list of integers, e.g. `"1,2,4"`.
pub fn int_list(s: &str) -> Result<Vec<i64>, String> {
    let ints = integers(s)?;
    if ints.is_empty() {
        return Err(format!("expected integers, got {s:?}"));
    }
    Ok(ints)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_point_lists() {
        assert_eq!(
            points("(0,0),(1,0),(0,1)").unwrap(),
            vec![pt(0, 0), pt(1, 0), pt(0, 1)]
        );
        assert_eq!(points("(-1, 1)").unwrap(), vec![pt(-1, 1)]);
        assert_eq!(points("1,0 0,-1").unwrap(), vec![pt(1, 0), pt(0, -1)]);
        assert!(points("(1,2,3)").is_err());
        assert!(points("x").is_err());
    }

    #[test]
    fn parses_single_point() {
        assert_eq!(point("1,0").unwrap(), pt(1, 0));
        assert_eq!(point("(-1,1)").unwrap(), pt(-1, 1));
        assert!(point("(1,0),(0,1)").is_err());
    }

    #[test]
    fn parses_int_lists() {
        assert_eq!(int_list("1,2,4").unwrap(), vec![1, 2, 4]);
        assert_eq!(int_list("3").unwrap(), vec![3]);
        assert!(int_list("").is_err());
    }
}
