mod common;

use std::collections::BTreeSet;

use common::data;
use diffstruct::stripes::StripeParams;
use diffstruct_pipeline::params::ParamsFile;
use diffstruct_pipeline::SessionConfig;
use serde_json::Value;

fn schema(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(data(&format!("schema/{name}"))).unwrap()).unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn config_schema_lists_every_field() {
    let s = schema("config.schema.json");
    let cfg = SessionConfig { mesh: Some("m.obj".into()), ..Default::default() };
    let v = serde_json::to_value(&cfg).unwrap();
    assert_eq!(keys(&v), keys(&s["properties"]));
    assert_eq!(keys(&v["material"]), keys(&s["$defs"]["material"]["properties"]));
    assert_eq!(keys(&v["anisotropy"]), keys(&s["$defs"]["anisotropy"]["properties"]));
}

#[test]
fn config_schema_defaults_match_code() {
    let s = schema("config.schema.json");
    let v = serde_json::to_value(SessionConfig::default()).unwrap();
    for field in ["gamma", "k", "max_depth", "mass_lumping", "normalization"] {
        assert_eq!(s["properties"][field]["default"], v[field], "{field}");
    }
    for (group, fields) in [("material", &v["material"]), ("anisotropy", &v["anisotropy"])] {
        for (k, want) in fields.as_object().unwrap() {
            assert_eq!(&s["$defs"][group]["properties"][k]["default"], want, "{group}.{k}");
        }
    }
}

#[test]
fn params_schema_lists_every_field() {
    let s = schema("stripe_params.schema.json");
    let p = StripeParams { gamma: Some(1.0), r: Some(1.0), ..Default::default() };
    assert_eq!(keys(&serde_json::to_value(p).unwrap()), keys(&s["$defs"]["params"]["properties"]));
}

#[test]
fn bundled_configs_and_params_parse() {
    for name in ["2d_a", "2d_b", "2d_c", "sphere"] {
        common::config(name).validate().unwrap();
    }
    for name in ["table1", "teaser", "empty"] {
        ParamsFile::load(&data(&format!("params/{name}.json"))).unwrap();
    }
    match ParamsFile::load(&data("params/table1.json")).unwrap() {
        ParamsFile::Table(rows) => {
            assert_eq!(rows.len(), 16);
            for row in rows {
                row.params.validate().unwrap();
            }
        }
        ParamsFile::Single(_) => panic!("table expected"),
    }
}
