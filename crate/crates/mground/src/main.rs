//! Command-line front end: parse, analyze, ground, render.

use mground::analysis::{instantiation_sequence, refine_sequence};
use mground::ground::DisplayAtomSet;
use mground::grounder::{ground_program, GroundError, GroundOptions};
use mground::oracle;
use mground::ops::well_founded_model_traced;
use mground::parser::parse_program;
use mground::Interp4;
use std::process::ExitCode;

const USAGE: &str = "usage: mground [--trace] [--print-components] [--simplify] [--exact-agg] [--max-steps N] FILE
       mground oracle <stable|foid|wf> [--trace] FILE";

struct Args {
    trace: bool,
    print_components: bool,
    simplify: bool,
    exact_agg: bool,
    max_steps: Option<u64>,
    positional: Vec<String>,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut args = Args {
        trace: false,
        print_components: false,
        simplify: false,
        exact_agg: false,
        max_steps: None,
        positional: Vec::new(),
    };
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--trace" => args.trace = true,
            "--print-components" => args.print_components = true,
            "--simplify" => args.simplify = true,
            "--exact-agg" => args.exact_agg = true,
            "--max-steps" => {
                let v = it.next().ok_or("--max-steps expects a number")?;
                args.max_steps = Some(v.parse().map_err(|_| format!("invalid step count `{v}`"))?);
            }
            flag if flag.starts_with('-') => return Err(format!("unknown flag `{flag}`")),
            other => args.positional.push(other.to_string()),
        }
    }
    Ok(args)
}

fn read_program(path: &str) -> Result<mground::Program, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    parse_program(&text).map_err(|e| format!("{path}:{e}"))
}

fn run(args: Args) -> Result<ExitCode, String> {
    if args.positional.first().map(String::as_str) == Some("oracle") {
        return run_oracle(&args);
    }
    let [file] = &args.positional[..] else {
        return Err(USAGE.to_string());
    };
    let program = read_program(file)?;

    if args.print_components {
        let seq = refine_sequence(&instantiation_sequence(&program), &program);
        for (i, c) in seq.components.iter().enumerate() {
            let flag = if c.stratified { "stratified" } else { "unstratified" };
            let ext: Vec<String> =
                c.externals.iter().map(|(p, n)| format!("{p}/{n}")).collect();
            println!(
                "component {i}: rules {:?} {flag} E={{{}}} refined {:?}",
                c.rules,
                ext.join(", "),
                c.subcomponents
            );
        }
        return Ok(ExitCode::SUCCESS);
    }

    let options = GroundOptions {
        refined: true,
        strip: args.simplify,
        exact_agg: args.exact_agg,
        max_steps: args.max_steps,
    };
    match ground_program(&program, &options) {
        Ok(out) => {
            if args.trace {
                for t in &out.trace {
                    let name = format!("{}.{}", t.outer + 1, t.sub + 1);
                    let flag = if t.stratified { "stratified" } else { "unstratified" };
                    let ext: Vec<String> =
                        t.externals.iter().map(|(p, n)| format!("{p}/{n}")).collect();
                    eprintln!("% component {name} [{flag}] E={{{}}}", ext.join(", "));
                    eprintln!(
                        "%   I[{name}] = {}",
                        DisplayAtomSet { set: &t.new_certain, table: &out.table }
                    );
                    eprintln!(
                        "%   J[{name}] = {}",
                        DisplayAtomSet { set: &t.new_possible, table: &out.table }
                    );
                }
            }
            print!("{}", out.text());
            Ok(ExitCode::SUCCESS)
        }
        Err(GroundError::Budget { steps }) => {
            eprintln!("mground: step budget exhausted after {steps} rule groundings");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn run_oracle(args: &Args) -> Result<ExitCode, String> {
    let [_, mode, file] = &args.positional[..] else {
        return Err(USAGE.to_string());
    };
    let program = read_program(file)?;
    let mut table = mground::AtomTable::new();
    let universe = oracle::term_universe(&program);
    let rules = oracle::naive_ground(&program, &universe, &mut table, oracle::DEFAULT_RULE_CAP)
        .map_err(|e| e.to_string())?;
    match mode.as_str() {
        "stable" | "foid" => {
            let models = if mode == "stable" {
                oracle::enumerate_stable(&rules, oracle::DEFAULT_ATOM_CAP)
            } else {
                oracle::enumerate_foid_stable(&rules, oracle::DEFAULT_ATOM_CAP)
            }
            .map_err(|e| e.to_string())?;
            for m in &models {
                println!("{}", DisplayAtomSet { set: m, table: &table });
            }
            eprintln!("% {} model(s)", models.len());
        }
        "wf" => {
            let (model, steps) = well_founded_model_traced(&rules, &Interp4::default());
            if args.trace {
                for (i, s) in steps.iter().enumerate() {
                    eprintln!(
                        "% {}. S({}) = {}    S({}) = {}",
                        i + 1,
                        DisplayAtomSet { set: &s.certain_arg, table: &table },
                        DisplayAtomSet { set: &s.certain, table: &table },
                        DisplayAtomSet { set: &s.possible_arg, table: &table },
                        DisplayAtomSet { set: &s.possible, table: &table },
                    );
                }
            }
            println!("I = {}", DisplayAtomSet { set: &model.certain, table: &table });
            println!("J = {}", DisplayAtomSet { set: &model.possible, table: &table });
        }
        other => return Err(format!("unknown oracle mode `{other}`\n{USAGE}")),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match parse_args(&argv).and_then(run) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("mground: {msg}");
            ExitCode::FAILURE
        }
    }
}
