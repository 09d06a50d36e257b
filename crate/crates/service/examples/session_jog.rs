//! Drive a jogging session in-process: move to a mid pose, jog J1 and the
//! tool, and print the events a WebSocket client would receive.

use armsizer::model::{Dof, RobotKind};
use armsizer::pipeline::ScenarioConfig;
use armsizer_service::{JogCommand, Session};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let session = Session::new(RobotKind::Cr4, ScenarioConfig::benchmark())?;
    let events = session.hub.subscribe();
    session.set_configuration(&[0.0, 0.4, -0.3, 0.0])?;

    let jogs = [
        JogCommand::Joint { axis: 0, increment: 0.05, rate_limit_hz: None },
        JogCommand::Cartesian { axis: Dof::Z, increment: 0.01, rate_limit_hz: None },
        JogCommand::Joint { axis: 1, increment: 0.5, rate_limit_hz: None },
        JogCommand::Cartesian { axis: Dof::Rx, increment: 0.01, rate_limit_hz: None },
    ];
    for cmd in &jogs {
        match session.jog_now(cmd) {
            Ok(out) => {
                let tool = out.state.tool.position;
                println!("applied {:.3} (clamped {}), tool at {tool:.4?}", out.applied, out.clamped);
            }
            Err(e) => println!("rejected: {e}"),
        }
    }
    println!();
    while let Some(e) = events.try_recv() {
        println!("{}", serde_json::to_string(&e)?.chars().take(110).collect::<String>());
    }
    Ok(())
}
