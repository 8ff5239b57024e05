//! Turns a validated document into one composed model.

use std::collections::BTreeMap;

use twoport_ss::prelude::*;

use crate::error::CliError;
use crate::netlist::{BlockSpec, Kind, LoopSpec, NetlistDoc, Order, Target};

fn compose<T>(r: twoport_ss::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Compose)
}

fn lc_params(spec: &BlockSpec) -> LcParams<f64> {
    let base = LcParams::new(spec.param("L").unwrap_or(f64::NAN), spec.param("C").unwrap_or(f64::NAN));
    base.with_esr(spec.param("r_L").unwrap_or(base.r_l), spec.param("r_C").unwrap_or(base.r_c))
}

fn plant(spec: &BlockSpec) -> Result<Block, CliError> {
    let p = |k: &str| spec.param(k).unwrap_or(f64::NAN);
    let converter = |topology: Topology| -> Result<Block, CliError> {
        let op = spec.operating_point.expect("validated converter");
        let op = compose(solve_operating_point(topology, op.v_in, op.v_out, op.i_out))?;
        let params = lc_params(spec);
        compose(match topology {
            Topology::Boost => boost_ccm(&params, &op),
            Topology::Buck => buck_ccm(&params, &op),
        })
    };
    match spec.kind {
        Kind::Resistor => compose(resistor(p("R"))),
        Kind::LcFilter => compose(lc_filter(&lc_params(spec))),
        Kind::BoostCcm => converter(Topology::Boost),
        Kind::BuckCcm => converter(Topology::Buck),
        k => unreachable!("{k:?} is not a plant block"),
    }
}

fn controller_block(name: &str, spec: &BlockSpec) -> Result<Controller, CliError> {
    let p = |k: &str| spec.param(k).unwrap_or(f64::NAN);
    let params = match spec.kind {
        Kind::ControllerType1 => ControllerParams::Type1 { k_i: p("K_i") },
        Kind::ControllerType2 => ControllerParams::Type2 { k_i: p("K_i"), t_z: p("T_z"), t_p: p("T_p") },
        Kind::ControllerType3 => ControllerParams::Type3 {
            k_i: p("K_i"),
            t_z1: p("T_z1"),
            t_z2: p("T_z2"),
            t_p1: p("T_p1"),
            t_p2: p("T_p2"),
        },
        k => unreachable!("{k:?} is not a controller"),
    };
    Ok(compose(controller(&params))?.named(name))
}

/// Labels of a model under construction, each tagged with the cascade entry
/// that owns it.
#[derive(Debug, Default)]
struct Owners {
    states: Vec<(String, String)>,
    controls: Vec<(String, String)>,
}

impl Owners {
    fn push_block(&mut self, owner: &str, blk: &Block) {
        self.states.extend(blk.state_labels().iter().map(|l| (owner.to_string(), l.clone())));
        self.controls.extend(blk.control_labels().iter().map(|l| (owner.to_string(), l.clone())));
    }

    fn find(list: &[(String, String)], owner: &str, label: &str) -> Option<usize> {
        list.iter().position(|(o, l)| o == owner && l == label)
    }

    fn qualified(list: &[(String, String)]) -> Vec<String> {
        list.iter().map(|(o, l)| format!("{o}.{l}")).collect()
    }
}

/// Closes one loop on `model`, where `owners` describes the labels the
/// document may refer to.
fn close_one(
    doc: &NetlistDoc,
    lp: &LoopSpec,
    model: &Block,
    owner: &str,
    owners: &mut Owners,
) -> Result<Block, CliError> {
    let ctrl = controller_block(&lp.controller, &doc.blocks[&lp.controller])?;
    let ctl = Owners::find(&owners.controls, owner, &lp.ctl).ok_or_else(|| {
        CliError::UnresolvedRef(format!("converter '{}' has no control input '{}'", lp.converter, lp.ctl))
    })?;
    let open = compose(attach_controller_open_loop(model, &ctrl, ctl))?;
    owners.states.extend((1..=ctrl.m()).map(|i| (owner.to_string(), format!("{}.x{i}", lp.controller))));
    let target = match lp.parsed_target()? {
        Target::OutputVoltage => LoopTarget::OutputVoltage,
        Target::State(label) => {
            LoopTarget::State(Owners::find(&owners.states, owner, &label).ok_or_else(|| {
                CliError::UnresolvedRef(format!("converter '{}' has no state '{label}'", lp.converter))
            })?)
        }
    };
    let k = compose(feedback_gain(target, &open, ctl))?;
    owners.controls[ctl].1 = format!("{}.ref", lp.controller);
    compose(close_loop(&open, &k))
}

/// Builds the model described by `doc`. Control and state labels of the
/// result are qualified by the owning cascade entry, e.g. `boost.iL` or
/// `boost.cv.ref`.
pub fn build_model(doc: &NetlistDoc) -> Result<Block, CliError> {
    let mut plants: BTreeMap<&str, Block> = BTreeMap::new();
    for name in doc.cascade.iter().chain(doc.loops.iter().map(|l| &l.converter)) {
        if !plants.contains_key(name.as_str()) {
            plants.insert(name, plant(&doc.blocks[name])?);
        }
    }

    let mut owners = Owners::default();
    let model = match doc.order() {
        Order::LoopsFirst => {
            let mut local: BTreeMap<&str, Owners> = BTreeMap::new();
            for lp in &doc.loops {
                let model = &plants[lp.converter.as_str()];
                let own = local.entry(&lp.converter).or_insert_with(|| {
                    let mut o = Owners::default();
                    o.push_block(&lp.converter, model);
                    o
                });
                let closed = close_one(doc, lp, model, &lp.converter, own)?;
                plants.insert(&lp.converter, closed);
            }
            let chain: Vec<Block> = doc.cascade.iter().map(|n| plants[n.as_str()].clone()).collect();
            for (name, blk) in doc.cascade.iter().zip(&chain) {
                match local.remove(name.as_str()) {
                    Some(o) => {
                        owners.states.extend(o.states);
                        owners.controls.extend(o.controls);
                    }
                    None => owners.push_block(name, blk),
                }
            }
            compose(cascade(&chain))?
        }
        Order::CascadeFirst => {
            let chain: Vec<Block> = doc.cascade.iter().map(|n| plants[n.as_str()].clone()).collect();
            for (name, blk) in doc.cascade.iter().zip(&chain) {
                owners.push_block(name, blk);
            }
            let mut model = compose(cascade(&chain))?;
            for lp in &doc.loops {
                model = close_one(doc, lp, &model, &lp.converter, &mut owners)?;
            }
            model
        }
    };
    let (a, b, c, d, _, _) = model.into_parts();
    compose(Block::new(a, b, c, d, Owners::qualified(&owners.controls), Owners::qualified(&owners.states)))
}

/// Large-signal values the small-signal step output is measured from, keyed
/// by qualified label: `<converter>.iL` and `<converter>.vC` from the lossless
/// operating point, and `v_out` from the last converter in the cascade.
pub fn operating_offsets(doc: &NetlistDoc) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for name in &doc.cascade {
        let spec = &doc.blocks[name];
        let topology = match spec.kind {
            Kind::BoostCcm => Topology::Boost,
            Kind::BuckCcm => Topology::Buck,
            _ => continue,
        };
        let op = spec.operating_point.expect("validated converter");
        let op = compose(solve_operating_point(topology, op.v_in, op.v_out, op.i_out))?;
        out.insert(format!("{name}.iL"), op.i_l);
        out.insert(format!("{name}.vC"), op.v_out);
        out.insert(V_OUT.to_string(), op.v_out);
    }
    Ok(out)
}
