use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ExtReal, Family, SetFunctionSpec, SubsetMask};
use crate::error::{Error, Result};

/// JSON form: `{"d", "family", "params"}` or `{"d", "table"}`, subsets as
/// sorted 1-based index arrays and `"inf"` for `+∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetFunctionJson {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<ExtReal>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupParams {
    groups: Vec<Vec<usize>>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockParams {
    blocks: Vec<Vec<usize>>,
    #[serde(default)]
    costs: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridParams {
    d1: usize,
    d2: usize,
}

fn cfg(e: impl std::fmt::Display) -> Error {
    Error::InvalidSetFunction(e.to_string())
}

fn masks(lists: &[Vec<usize>], d: usize) -> Result<Vec<SubsetMask>> {
    lists.iter().map(|l| SubsetMask::from_one_based(l, d)).collect()
}

fn lists(ms: &[SubsetMask]) -> Vec<Vec<usize>> {
    ms.iter().map(|m| m.to_one_based()).collect()
}

impl SetFunctionJson {
    pub fn to_spec(&self) -> Result<SetFunctionSpec> {
        let d = self.d;
        if let Some(t) = &self.table {
            if self.family.is_some() {
                return Err(cfg("give either \"family\" or \"table\", not both"));
            }
            return SetFunctionSpec::table(d, t.iter().map(|v| v.value()).collect());
        }
        let name = self.family.as_deref().ok_or_else(|| cfg("missing \"family\" or \"table\""))?;
        let params = self.params.clone().unwrap_or(json!({}));
        let groups = || -> Result<(Vec<SubsetMask>, Vec<f64>)> {
            let p: GroupParams = serde_json::from_value(params.clone()).map_err(cfg)?;
            let g = masks(&p.groups, d)?;
            let w = p.weights.unwrap_or_else(|| vec![1.0; g.len()]);
            Ok((g, w))
        };
        let family = match name {
            "cardinality" => Family::Cardinality,
            "indicator_nonempty" => Family::IndicatorNonEmpty,
            "range" => Family::Range,
            "modified_range" => Family::ModifiedRange,
            "partition_group_count" => {
                let (groups, weights) = groups()?;
                Family::PartitionGroupCount { groups, weights }
            }
            "overlap_count" => {
                let (groups, weights) = groups()?;
                Family::OverlapCount { groups, weights }
            }
            "exclusive_hard" => Family::ExclusiveHard { groups: groups()?.0 },
            "exclusive_max_overlap" => Family::ExclusiveMaxOverlap { groups: groups()?.0 },
            "projected_range_2d" => {
                let p: GridParams = serde_json::from_value(params).map_err(cfg)?;
                Family::ProjectedRange2D { d1: p.d1, d2: p.d2 }
            }
            "block_code" => {
                let p: BlockParams = serde_json::from_value(params).map_err(cfg)?;
                let blocks = masks(&p.blocks, d)?;
                let costs = p.costs.unwrap_or_else(|| vec![1.0; blocks.len()]);
                Family::BlockCode { blocks, costs }
            }
            other => return Err(cfg(format!("unknown family \"{other}\""))),
        };
        SetFunctionSpec::new(d, family)
    }

    /// Serializes a function; minors are written as explicit tables.
    pub fn from_spec(f: &SetFunctionSpec) -> Result<Self> {
        let d = f.d();
        let table = |f: &SetFunctionSpec| -> Result<Self> {
            let t = f.to_table()?.into_iter().map(ExtReal::raw).collect();
            Ok(SetFunctionJson { d, family: None, params: None, table: Some(t) })
        };
        if f.is_minor() {
            return table(f);
        }
        let params = match f.family() {
            Family::ExplicitTable(_) => return table(f),
            Family::PartitionGroupCount { groups, weights } | Family::OverlapCount { groups, weights } => {
                Some(json!({"groups": lists(groups), "weights": weights}))
            }
            Family::ExclusiveHard { groups } | Family::ExclusiveMaxOverlap { groups } => {
                Some(json!({"groups": lists(groups)}))
            }
            Family::ProjectedRange2D { d1, d2 } => Some(json!({"d1": d1, "d2": d2})),
            Family::BlockCode { blocks, costs } => Some(json!({"blocks": lists(blocks), "costs": costs})),
            _ => None,
        };
        Ok(SetFunctionJson { d, family: Some(f.family().name().to_string()), params, table: None })
    }
}

impl SetFunctionSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: SetFunctionJson = serde_json::from_str(s).map_err(cfg)?;
        j.to_spec()
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string(&SetFunctionJson::from_spec(self)?).map_err(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_families_and_tables() {
        let f = SetFunctionSpec::from_json_str(
            r#"{"d":3,"family":"block_code","params":{"blocks":[[1,2],[2,3],[1,3]]}}"#,
        )
        .unwrap();
        assert_eq!(f.value(SubsetMask::from_bits(0b011)), 1.0);
        assert!(f.value(SubsetMask::from_bits(0b111)).is_infinite());
        let t = SetFunctionSpec::from_json_str(r#"{"d":1,"table":[0,"inf"]}"#);
        assert!(t.is_err(), "domain must cover V");
        let t = SetFunctionSpec::from_json_str(r#"{"d":1,"table":[0,2.5]}"#).unwrap();
        assert_eq!(t.value(SubsetMask::from_bits(1)), 2.5);
    }

    #[test]
    fn round_trip() {
        let g = vec![SubsetMask::from_bits(0b011), SubsetMask::from_bits(0b100)];
        let f = SetFunctionSpec::partition_group_count(3, g).unwrap();
        let back = SetFunctionSpec::from_json_str(&f.to_json_string().unwrap()).unwrap();
        assert_eq!(f.to_table().unwrap(), back.to_table().unwrap());
        let minor = f.restrict(SubsetMask::from_bits(0b110)).unwrap();
        let back = SetFunctionSpec::from_json_str(&minor.to_json_string().unwrap()).unwrap();
        assert_eq!(minor.to_table().unwrap(), back.to_table().unwrap());
    }

    #[test]
    fn rejects_unknown_family_and_params() {
        assert!(SetFunctionSpec::from_json_str(r#"{"d":3,"family":"bogus"}"#).is_err());
        assert!(SetFunctionSpec::from_json_str(
            r#"{"d":2,"family":"overlap_count","params":{"groups":[[1,2]],"extra":1}}"#
        )
        .is_err());
    }
}
