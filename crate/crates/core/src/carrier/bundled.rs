//! Carriers shipped with the crate: Z₂, Z₆, S₃, Q₈ (σ = inverse), a three-element
//! commutative monoid that is not a group (σ = id), and the lattices ℤ¹, ℤ².

use super::{Carrier, FiniteCarrier, LatticeCarrier};

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 7] = ["Z2", "Z6", "S3", "Q8", "M3", "lattice1", "lattice2"];

pub fn by_name(name: &str) -> Option<Carrier> {
    Some(match name {
        "Z2" => z2(),
        "Z6" => cyclic(6),
        "S3" => s3(),
        "Q8" => q8(),
        "M3" => monoid3(),
        "lattice1" => lattice(1, 64, 512),
        "lattice2" => lattice(2, 8, 32),
        _ => return None,
    })
}

pub fn all() -> Vec<Carrier> {
    NAMES.iter().filter_map(|n| by_name(n)).collect()
}

/// Z₂ with elements `e`, `a`.
pub fn z2() -> Carrier {
    finite(vec!["e".into(), "a".into()], |x, y| (x + y) % 2, |x| x)
}

/// Cyclic group Zₙ with labels `0..n` and σ(x) = −x.
pub fn cyclic(n: usize) -> Carrier {
    assert!(n > 0);
    finite(
        (0..n).map(|i| i.to_string()).collect(),
        move |x, y| (x + y) % n,
        move |x| (n - x) % n,
    )
}

const S3_LABELS: [&str; 6] = ["e", "(12)", "(13)", "(23)", "(123)", "(132)"];
const S3_PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 0, 2],
    [2, 1, 0],
    [0, 2, 1],
    [1, 2, 0],
    [2, 0, 1],
];

/// Symmetric group on three letters; `xy` applies `y` first.
pub fn s3() -> Carrier {
    let index = |p: [usize; 3]| S3_PERMS.iter().position(|q| *q == p).unwrap();
    let compose = move |x: usize, y: usize| {
        let (a, b) = (S3_PERMS[x], S3_PERMS[y]);
        index([a[b[0]], a[b[1]], a[b[2]]])
    };
    let inverse = move |x: usize| {
        let p = S3_PERMS[x];
        let mut inv = [0; 3];
        for (i, &pi) in p.iter().enumerate() {
            inv[pi] = i;
        }
        index(inv)
    };
    finite(
        S3_LABELS.iter().map(|s| s.to_string()).collect(),
        compose,
        inverse,
    )
}

/// Quaternion group {±1, ±i, ±j, ±k}.
pub fn q8() -> Carrier {
    // element 2u + s: unit u ∈ {1, i, j, k}, sign s (0 = +, 1 = −)
    const UNIT: [[(usize, usize); 4]; 4] = [
        [(0, 0), (1, 0), (2, 0), (3, 0)],
        [(1, 0), (0, 1), (3, 0), (2, 1)],
        [(2, 0), (3, 1), (0, 1), (1, 0)],
        [(3, 0), (2, 0), (1, 1), (0, 1)],
    ];
    let names = ["1", "i", "j", "k"];
    let labels = (0..8)
        .map(|e| format!("{}{}", if e % 2 == 1 { "-" } else { "" }, names[e / 2]))
        .collect();
    let compose = |x: usize, y: usize| {
        let (u, s) = UNIT[x / 2][y / 2];
        2 * u + ((x % 2 + y % 2 + s) % 2)
    };
    let inverse = |x: usize| if x / 2 == 0 { x } else { x ^ 1 };
    finite(labels, compose, inverse)
}

/// {e, a, z} with a·a = z and z absorbing; commutative, not a group, σ = id.
pub fn monoid3() -> Carrier {
    let compose = |x: usize, y: usize| match (x, y) {
        (0, y) => y,
        (x, 0) => x,
        _ => 2,
    };
    finite(vec!["e".into(), "a".into(), "z".into()], compose, |x| x)
}

pub fn lattice(dim: usize, window: i64, folner_max: i64) -> Carrier {
    Carrier::Lattice(
        LatticeCarrier::new(dim, window, folner_max).expect("valid lattice parameters"),
    )
}

fn finite(
    labels: Vec<String>,
    compose: impl Fn(usize, usize) -> usize,
    involution: impl Fn(usize) -> usize,
) -> Carrier {
    Carrier::Finite(
        FiniteCarrier::from_fn(labels, compose, involution, Some(0)).expect("bundled table"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prod(c: &Carrier, x: &str, y: &str) -> String {
        let p = c
            .compose(&c.parse_label(x).unwrap(), &c.parse_label(y).unwrap())
            .unwrap();
        c.label(&p)
    }

    #[test]
    fn s3_products() {
        let c = s3();
        assert_eq!(prod(&c, "(12)", "(13)"), "(132)");
        assert_eq!(prod(&c, "(123)", "(123)"), "(132)");
        assert_eq!(prod(&c, "(123)", "(132)"), "e");
    }

    #[test]
    fn quaternion_relations() {
        let c = q8();
        assert_eq!(prod(&c, "i", "j"), "k");
        assert_eq!(prod(&c, "j", "i"), "-k");
        assert_eq!(prod(&c, "k", "k"), "-1");
        assert_eq!(prod(&c, "-i", "-j"), "k");
        assert_eq!(prod(&c, "-1", "-1"), "1");
        let i = c.parse_label("i").unwrap();
        assert_eq!(c.label(&c.involute(&i).unwrap()), "-i");
    }

    #[test]
    fn names_resolve() {
        for n in NAMES {
            assert!(by_name(n).is_some(), "{n}");
        }
        assert!(by_name("nope").is_none());
        assert_eq!(all().len(), NAMES.len());
    }
}
