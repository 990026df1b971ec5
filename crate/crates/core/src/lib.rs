//! Switch-level simulation of full-adder netlists with conventional and
//! adiabatic energy accounting.

pub mod adders;
pub mod cli;
pub mod energy;
pub mod harness;
pub mod netlist;
pub mod resistnet;
pub mod switch_eval;
