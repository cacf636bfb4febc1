//! Line-delimited JSON over one duplex connection.
//!
//! Each line is one message object tagged by `"type"`. Client to engine:
//!
//! ```text
//! {"type":"utterance","text":"What's my next step?"}
//! {"type":"frames","frames":[{"timestamp":12.5,"hash":"9f2c..."}]}
//! {"type":"command","command":"pause"}
//! {"type":"command","command":"play","response_id":3}
//! {"type":"config","tts_speed":1.5}
//! {"type":"skip","step":2}
//! ```
//!
//! Engine to client, in the order produced:
//!
//! ```text
//! {"type":"state_change","at":1000,"from":"S0","to":"S2","event":"E2"}
//! {"type":"response","envelope":{"response_id":1,"state":"S2",...}}
//! {"type":"alert","at":8000,"event":"E5","judgment_id":4,"text":"..."}
//! {"type":"playback","at":9000,"playback":{"status":"playing",...}}
//! {"type":"tts","at":1000,"response_id":1,"audio_ref":"tts://mock/1","speed":1.0}
//! {"type":"notice","at":1000,"text":"Okay, skipping step 3."}
//! {"type":"error","at":1000,"message":"..."}
//! ```
//!
//! Times are session milliseconds. A line that does not parse is answered
//! with an `error` message and otherwise ignored.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::sync::mpsc;
use std::time::Duration;

use super::{Engine, ServerMessage, SessionError, Stimulus};

pub type ClientMessage = Stimulus;

pub fn parse_client_message(line: &str) -> Result<ClientMessage, SessionError> {
    serde_json::from_str(line).map_err(|e| SessionError::Protocol(e.to_string()))
}

fn write_messages(out: &mut impl Write, msgs: &[ServerMessage]) -> std::io::Result<()> {
    for m in msgs {
        writeln!(out, "{}", serde_json::to_string(m).expect("server messages serialize"))?;
    }
    out.flush()
}

fn parse_error(engine: &Engine, e: SessionError) -> ServerMessage {
    ServerMessage::Error { at: engine.now(), message: e.to_string() }
}

/// Feeds client lines to the engine one at a time, pumping after each and
/// writing whatever came out. Suited to simulated clocks and piped input.
pub fn serve_lines(engine: &mut Engine, input: impl BufRead, mut output: impl Write) -> Result<(), SessionError> {
    let io = |e| SessionError::io("<connection>", e);
    for line in input.lines() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_client_message(&line) {
            Ok(msg) => engine.submit(msg),
            Err(e) => {
                let err = parse_error(engine, e);
                write_messages(&mut output, &[err]).map_err(io)?;
            }
        }
        engine.pump();
        write_messages(&mut output, &engine.take_outbound()).map_err(io)?;
    }
    Ok(())
}

/// Serves one live connection: client lines arrive on a reader thread while
/// the loop keeps pumping so ticks and idle resets happen on time.
pub fn serve_connection(
    engine: &mut Engine,
    input: impl BufRead + Send + 'static,
    mut output: impl Write,
    poll: Duration,
) -> Result<(), SessionError> {
    let io = |e| SessionError::io("<connection>", e);
    let (tx, rx) = mpsc::channel::<String>();
    std::thread::spawn(move || {
        for line in input.lines().map_while(Result::ok) {
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    loop {
        match rx.recv_timeout(poll) {
            Ok(line) if line.trim().is_empty() => {}
            Ok(line) => match parse_client_message(&line) {
                Ok(msg) => engine.submit(msg),
                Err(e) => {
                    let err = parse_error(engine, e);
                    write_messages(&mut output, &[err]).map_err(io)?;
                }
            },
            Err(mpsc::RecvTimeoutError::Timeout) => {}
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                engine.pump();
                write_messages(&mut output, &engine.take_outbound()).map_err(io)?;
                return Ok(());
            }
        }
        engine.pump();
        write_messages(&mut output, &engine.take_outbound()).map_err(io)?;
    }
}

/// Accepts connections one after another; the session outlives them.
pub fn serve_tcp(engine: &mut Engine, addr: impl ToSocketAddrs) -> Result<(), SessionError> {
    let listener = TcpListener::bind(addr).map_err(|e| SessionError::io("<listener>", e))?;
    if let Ok(a) = listener.local_addr() {
        log::info!("listening on {a}");
    }
    for stream in listener.incoming() {
        let stream = stream.map_err(|e| SessionError::io("<listener>", e))?;
        let reader = BufReader::new(stream.try_clone().map_err(|e| SessionError::io("<connection>", e))?);
        if let Err(e) = serve_connection(engine, reader, stream, Duration::from_millis(50)) {
            log::warn!("connection ended: {e}");
        }
    }
    Ok(())
}
