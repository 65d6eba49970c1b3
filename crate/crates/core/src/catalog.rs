//! The on-disk coefficient format and the built-in method catalog.
//!
//! Coefficient files are TOML with every coefficient stored as a decimal
//! string, parsed exactly once to binary64. Serializing emits the shortest
//! decimal that round-trips, so parse -> serialize -> parse is bitwise
//! idempotent on every coefficient. A reference copy of the built-in catalog
//! ships at `data/catalog.toml` and is compiled in.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tableau::{ArkMethod, ButcherTableau, MethodError, TableauKind};

/// Embedded copy of the reference catalog.
pub const BUILTIN_CATALOG_TOML: &str = include_str!("../data/catalog.toml");

pub const SCHEMA_NAME: &str = "ark-method-catalog";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read coefficient file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("coefficient file parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("coefficient file declares schema {schema:?} version {version}, expected {SCHEMA_NAME:?} version {SCHEMA_VERSION}")]
    Schema { schema: String, version: u32 },
    #[error("method {method}, {tableau} tableau, {field}[{index}]: invalid decimal {text:?}")]
    BadDecimal { method: String, tableau: &'static str, field: &'static str, index: String, text: String },
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error("unknown method name {0:?}")]
    UnknownMethod(String),
}

/// Declared certification targets for one catalog entry.
///
/// Fields are optional so pure-explicit entries can omit the implicit-side
/// properties that do not apply to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DeclaredProperties {
    pub order_explicit: Option<u32>,
    pub order_implicit: Option<u32>,
    pub order_coupled: Option<u32>,
    pub stage_order_explicit: Option<u32>,
    pub stage_order_implicit: Option<u32>,
    pub a_stable: Option<bool>,
    pub l_stable: Option<bool>,
    pub algebraically_stable: Option<bool>,
    pub stiffly_accurate_dirk: Option<bool>,
    pub stiffly_accurate_erk: Option<bool>,
    pub shared_b: Option<bool>,
    pub shared_c: Option<bool>,
    pub max_imag_step: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileRoot {
    schema: String,
    version: u32,
    #[serde(default)]
    method: Vec<MethodRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MethodRecord {
    name: String,
    order: u32,
    implicit_solves: u32,
    explicit_evals: u32,
    #[serde(default)]
    pure_explicit: bool,
    #[serde(default)]
    properties: Option<DeclaredProperties>,
    explicit: TableauRecord,
    implicit: TableauRecord,
}

#[derive(Debug, Serialize, Deserialize)]
struct TableauRecord {
    c: Vec<String>,
    b: Vec<String>,
    a: Vec<Vec<String>>,
}

/// A catalog entry: the method plus its declared certification targets.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub method: ArkMethod,
    pub declared: Option<DeclaredProperties>,
}

/// Where to load a catalog from.
#[derive(Debug, Clone)]
pub enum CatalogSource {
    /// The compiled-in reference catalog.
    BuiltIn,
    /// A coefficient file on disk.
    File(PathBuf),
}

fn parse_decimal(
    method: &str,
    tableau: &'static str,
    field: &'static str,
    index: String,
    text: &str,
) -> Result<f64, CatalogError> {
    let v: f64 = text.trim().parse().map_err(|_| CatalogError::BadDecimal {
        method: method.to_owned(),
        tableau,
        field,
        index: index.clone(),
        text: text.to_owned(),
    })?;
    if !v.is_finite() {
        return Err(CatalogError::BadDecimal {
            method: method.to_owned(),
            tableau,
            field,
            index,
            text: text.to_owned(),
        });
    }
    Ok(v)
}

fn parse_tableau(
    method: &str,
    which: &'static str,
    kind: TableauKind,
    rec: &TableauRecord,
) -> Result<ButcherTableau, CatalogError> {
    let c = rec
        .c
        .iter()
        .enumerate()
        .map(|(i, s)| parse_decimal(method, which, "c", i.to_string(), s))
        .collect::<Result<Vec<_>, _>>()?;
    let b = rec
        .b
        .iter()
        .enumerate()
        .map(|(i, s)| parse_decimal(method, which, "b", i.to_string(), s))
        .collect::<Result<Vec<_>, _>>()?;
    let a = rec
        .a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, s)| parse_decimal(method, which, "a", format!("{i}][{j}"), s))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    ButcherTableau::new(kind, a, b, c).map_err(|source| {
        CatalogError::Method(MethodError::Tableau { name: method.to_owned(), source })
    })
}

fn entries_from_root(root: FileRoot) -> Result<Vec<CatalogEntry>, CatalogError> {
    if root.schema != SCHEMA_NAME || root.version != SCHEMA_VERSION {
        return Err(CatalogError::Schema { schema: root.schema, version: root.version });
    }
    let mut out = Vec::with_capacity(root.method.len());
    for rec in &root.method {
        let method = ArkMethod {
            name: rec.name.clone(),
            explicit: parse_tableau(&rec.name, "explicit", TableauKind::Explicit, &rec.explicit)?,
            implicit: parse_tableau(
                &rec.name,
                "implicit",
                TableauKind::DiagonallyImplicit,
                &rec.implicit,
            )?,
            declared_order: rec.order,
            declared_implicit_solves: rec.implicit_solves,
            declared_explicit_evals: rec.explicit_evals,
            is_pure_explicit: rec.pure_explicit,
        };
        method.validate()?;
        out.push(CatalogEntry { method, declared: rec.properties.clone() });
    }
    Ok(out)
}

/// Parse a coefficient file from a string.
pub fn parse_catalog_str(text: &str) -> Result<Vec<CatalogEntry>, CatalogError> {
    entries_from_root(toml::from_str(text)?)
}

/// Load all methods from the built-in catalog or a coefficient file.
pub fn load_catalog(source: &CatalogSource) -> Result<Vec<CatalogEntry>, CatalogError> {
    match source {
        CatalogSource::BuiltIn => parse_catalog_str(BUILTIN_CATALOG_TOML),
        CatalogSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| CatalogError::Io { path: path.clone(), source })?;
            parse_catalog_str(&text)
        }
    }
}

/// Load a catalog from a file path.
pub fn load_catalog_file(path: impl AsRef<Path>) -> Result<Vec<CatalogEntry>, CatalogError> {
    load_catalog(&CatalogSource::File(path.as_ref().to_path_buf()))
}

/// Case-sensitive exact-name lookup in the built-in catalog.
pub fn get_method(name: &str) -> Result<ArkMethod, CatalogError> {
    builtin_entry(name).map(|e| e.method)
}

/// Case-sensitive exact-name lookup returning the declared properties too.
pub fn builtin_entry(name: &str) -> Result<CatalogEntry, CatalogError> {
    load_catalog(&CatalogSource::BuiltIn)?
        .into_iter()
        .find(|e| e.method.name == name)
        .ok_or_else(|| CatalogError::UnknownMethod(name.to_owned()))
}

/// The DBM453 pair: 5 stages, 4 implicit solves sharing one diagonal
/// coefficient, third-order coupling, maximal imaginary-axis explicit
/// stability, A- and L-stable DIRK.
pub fn dbm453() -> ArkMethod {
    get_method("DBM453").expect("built-in catalog always contains DBM453")
}

/// Shortest round-tripping decimal for one coefficient.
fn decimal(x: f64) -> String {
    format!("{x}")
}

fn tableau_record(t: &ButcherTableau) -> TableauRecord {
    TableauRecord {
        c: t.c().iter().map(|&x| decimal(x)).collect(),
        b: t.b().iter().map(|&x| decimal(x)).collect(),
        a: t.a()
            .iter()
            .map(|row| row.iter().map(|&x| decimal(x)).collect())
            .collect(),
    }
}

/// Serialize entries back to the coefficient file format.
pub fn serialize_catalog(entries: &[CatalogEntry]) -> String {
    let root = FileRoot {
        schema: SCHEMA_NAME.to_owned(),
        version: SCHEMA_VERSION,
        method: entries
            .iter()
            .map(|e| MethodRecord {
                name: e.method.name.clone(),
                order: e.method.declared_order,
                implicit_solves: e.method.declared_implicit_solves,
                explicit_evals: e.method.declared_explicit_evals,
                pure_explicit: e.method.is_pure_explicit,
                properties: e.declared.clone(),
                explicit: tableau_record(&e.method.explicit),
                implicit: tableau_record(&e.method.implicit),
            })
            .collect(),
    };
    toml::to_string_pretty(&root).expect("catalog serialization cannot fail")
}

/// Names every built-in catalog must contain.
pub const REQUIRED_METHODS: [&str; 15] = [
    "ARS222", "ARS232", "ARS233", "ARS343", "ARS443", "GSA222", "SSP2232", "SSP3333b",
    "SSP3333c", "ARK324", "ARK436", "ARK437", "ARK548", "DBM453", "KGU35",
];

/// Map of built-in method name to (declared order, implicit solves, explicit evals).
pub fn builtin_summary() -> Result<BTreeMap<String, (u32, u32, u32)>, CatalogError> {
    Ok(load_catalog(&CatalogSource::BuiltIn)?
        .into_iter()
        .map(|e| {
            (
                e.method.name.clone(),
                (
                    e.method.declared_order,
                    e.method.declared_implicit_solves,
                    e.method.declared_explicit_evals,
                ),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_contains_required_methods() {
        let cat = load_catalog(&CatalogSource::BuiltIn).unwrap();
        for name in REQUIRED_METHODS {
            assert!(cat.iter().any(|e| e.method.name == name), "missing {name}");
        }
    }

    #[test]
    fn dbm453_gamma_on_implicit_diagonal() {
        let m = dbm453();
        let gamma = 0.32591194130117247_f64;
        let diag = m.implicit.diagonal();
        assert_eq!(diag[0], 0.0);
        for &d in &diag[1..] {
            assert_eq!(d.to_bits(), gamma.to_bits());
        }
        assert_eq!(m.stages(), 5);
        assert_eq!(m.declared_order, 3);
        assert_eq!(m.declared_implicit_solves, 4);
        assert_eq!(m.declared_explicit_evals, 5);
    }

    #[test]
    fn dbm453_shared_abscissae_as_printed() {
        let m = dbm453();
        let expected: [f64; 5] = [0.0, 0.1030620881159184, 0.72139131281753662, 1.28181117351981733, 1.0];
        for (x, e) in m.explicit.c().iter().zip(expected) {
            assert_eq!(x.to_bits(), e.to_bits());
        }
        assert!(m.shares_c());
        assert!(m.shares_b());
    }

    #[test]
    fn dbm453_weights_and_row_sums() {
        let m = dbm453();
        let b: [f64; 5] = [
            0.87795339639076672,
            -0.72692641526151549,
            0.7520413715737272,
            -0.22898029400415090,
            0.32591194130117247,
        ];
        for (x, e) in m.explicit.b().iter().zip(b) {
            assert_eq!(x.to_bits(), e.to_bits());
        }
        // explicit row 5 sums to c_5 = 1 within the row-sum tolerance
        let row5: f64 = m.explicit.a()[4].iter().sum();
        assert!((row5 - 1.0).abs() <= 1e-13);
        // stiffly accurate DIRK: implicit last row equals b
        assert!(m.implicit.is_stiffly_accurate());
    }

    #[test]
    fn dbm453_explicit_row2_as_printed() {
        let m = dbm453();
        assert_eq!(m.explicit.a()[1][0].to_bits(), 0.10306208811591838_f64.to_bits());
        for j in 1..5 {
            assert_eq!(m.explicit.a()[1][j], 0.0);
        }
    }

    #[test]
    fn catalog_row_sums_and_solve_counts() {
        for e in load_catalog(&CatalogSource::BuiltIn).unwrap() {
            let m = &e.method;
            assert!(m.explicit.row_sum_residual() <= 1e-13, "{} explicit", m.name);
            assert!(m.implicit.row_sum_residual() <= 1e-13, "{} implicit", m.name);
            assert_eq!(
                m.implicit.nonzero_diagonal_count(),
                m.declared_implicit_solves as usize,
                "{}",
                m.name
            );
        }
    }

    #[test]
    fn shared_b_is_bitwise_for_flagged_methods() {
        for e in load_catalog(&CatalogSource::BuiltIn).unwrap() {
            if e.declared.as_ref().and_then(|d| d.shared_b) == Some(true) {
                assert!(e.method.shares_b(), "{} shared-b must be bitwise", e.method.name);
            }
        }
    }

    #[test]
    fn get_method_is_case_sensitive() {
        assert!(get_method("DBM453").is_ok());
        assert!(matches!(get_method("dbm453"), Err(CatalogError::UnknownMethod(_))));
        assert!(matches!(get_method("NOSUCH"), Err(CatalogError::UnknownMethod(_))));
    }

    #[test]
    fn table1_counts_for_key_methods() {
        for (name, order, fi, fe) in [
            ("DBM453", 3, 4, 5),
            ("ARK548", 5, 7, 8),
            ("ARK436", 4, 5, 6),
            ("ARK437", 4, 6, 7),
            ("KGU35", 3, 0, 5),
            ("ARS443", 3, 4, 4),
        ] {
            let m = get_method(name).unwrap();
            assert_eq!(m.declared_order, order, "{name} order");
            assert_eq!(m.declared_implicit_solves, fi, "{name} f^I");
            assert_eq!(m.declared_explicit_evals, fe, "{name} f^E");
        }
    }

    #[test]
    fn round_trip_is_bitwise_idempotent() {
        let cat = load_catalog(&CatalogSource::BuiltIn).unwrap();
        let text = serialize_catalog(&cat);
        let again = parse_catalog_str(&text).unwrap();
        assert_eq!(cat.len(), again.len());
        for (x, y) in cat.iter().zip(&again) {
            assert_eq!(x.method.name, y.method.name);
            for (t1, t2) in [
                (&x.method.explicit, &y.method.explicit),
                (&x.method.implicit, &y.method.implicit),
            ] {
                assert_eq!(t1, t2, "{} tableau changed across round trip", x.method.name);
                for (r1, r2) in t1.a().iter().zip(t2.a()) {
                    for (v1, v2) in r1.iter().zip(r2) {
                        assert_eq!(v1.to_bits(), v2.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn file_with_bad_row_sum_names_the_row() {
        let text = r#"
schema = "ark-method-catalog"
version = 1
[[method]]
name = "BROKEN"
order = 1
implicit_solves = 0
explicit_evals = 1
pure_explicit = true
[method.explicit]
c = ["0", "0.5"]
b = ["1", "0"]
a = [["0", "0"], ["0.75", "0"]]
[method.implicit]
c = ["0", "0"]
b = ["0", "0"]
a = [["0", "0"], ["0", "0"]]
"#;
        let err = parse_catalog_str(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("BROKEN"), "{msg}");
        assert!(msg.contains("row 1") || msg.contains("1"), "{msg}");
    }

    #[test]
    fn parse_error_reports_locus() {
        let err = parse_catalog_str("schema = \"ark-method-catalog\"\nversion = \"x\"").unwrap_err();
        assert!(matches!(err, CatalogError::Parse(_)));
    }
}
