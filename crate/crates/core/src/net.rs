//! Length-prefixed TCP transport between user and server.
//!
//! One request per connection: the client sends a query file as a single
//! frame, the server replies with an answer file (or an error payload
//! starting with `"ERR "`) and closes. A frame is a 4-byte big-endian
//! payload length followed by that many bytes of UTF-8; payloads above
//! 64 MiB are refused. The server is stateless across requests and reads
//! nothing but the query.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;

use crate::error::{Error, Result};
use crate::protocol::{compute_answer, MessageDb};
use crate::wire::{parse_query, serialize_answer};

/// Hard ceiling on frame payloads.
pub const MAX_FRAME_LEN: usize = 64 * 1024 * 1024;

/// Writes one length-prefixed frame.
pub fn write_frame(stream: &mut impl Write, payload: &[u8]) -> Result<()> {
    if payload.len() > MAX_FRAME_LEN {
        return Err(Error::Transport(format!(
            "frame of {} bytes exceeds the {MAX_FRAME_LEN}-byte limit",
            payload.len()
        )));
    }
    stream.write_all(&(payload.len() as u32).to_be_bytes())?;
    stream.write_all(payload)?;
    stream.flush()?;
    Ok(())
}

/// Reads one length-prefixed frame, refusing oversized payloads.
pub fn read_frame(stream: &mut impl Read) -> Result<Vec<u8>> {
    let mut len_buf = [0u8; 4];
    stream.read_exact(&mut len_buf)?;
    let len = u32::from_be_bytes(len_buf) as usize;
    if len > MAX_FRAME_LEN {
        return Err(Error::Transport(format!(
            "frame of {len} bytes exceeds the {MAX_FRAME_LEN}-byte limit"
        )));
    }
    let mut payload = vec![0u8; len];
    stream.read_exact(&mut payload)?;
    Ok(payload)
}

/// A bound server over an immutable database.
pub struct PirServer {
    listener: TcpListener,
    db: Arc<MessageDb>,
}

impl PirServer {
    pub fn bind(addr: impl ToSocketAddrs, db: MessageDb) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        Ok(PirServer {
            listener,
            db: Arc::new(db),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accept loop; one handler thread per connection, forever.
    pub fn run(self) -> Result<()> {
        for stream in self.listener.incoming() {
            let Ok(stream) = stream else { continue };
            let db = Arc::clone(&self.db);
            thread::spawn(move || handle_connection(stream, &db));
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread and returns the bound
    /// address.
    pub fn spawn(self) -> Result<SocketAddr> {
        let addr = self.local_addr()?;
        thread::spawn(move || {
            let _ = self.run();
        });
        Ok(addr)
    }
}

fn handle_connection(mut stream: TcpStream, db: &MessageDb) {
    let reply = match serve_one(&mut stream, db) {
        Ok(answer_text) => answer_text.into_bytes(),
        Err(e) => format!("ERR {e}").into_bytes(),
    };
    let _ = write_frame(&mut stream, &reply);
}

fn serve_one(stream: &mut TcpStream, db: &MessageDb) -> Result<String> {
    let payload = read_frame(stream)?;
    let text = String::from_utf8(payload)
        .map_err(|_| Error::Transport("query payload is not UTF-8".into()))?;
    let query = parse_query(&text)?;
    if query.message_count() != db.message_count() {
        return Err(Error::Inconsistent(format!(
            "query covers {} indices, database stores {} messages",
            query.message_count(),
            db.message_count()
        )));
    }
    let answer = compute_answer(&query, db)?;
    Ok(serialize_answer(&answer))
}

/// Sends one query file to a server and returns the answer file.
pub fn fetch(addr: impl ToSocketAddrs, query_text: &str) -> Result<String> {
    let mut stream = TcpStream::connect(addr)?;
    write_frame(&mut stream, query_text.as_bytes())?;
    let payload = read_frame(&mut stream)?;
    let text = String::from_utf8(payload)
        .map_err(|_| Error::Transport("answer payload is not UTF-8".into()))?;
    if let Some(message) = text.strip_prefix("ERR ") {
        return Err(Error::Transport(message.to_string()));
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ProtocolParams;
    use crate::protocol::generate_query;
    use crate::rng::SeededRng;
    use crate::wire::{parse_answer, serialize_query};

    fn test_setup() -> (SocketAddr, MessageDb, ProtocolParams) {
        let params = ProtocolParams::derive(6, 2, 1, 3, 4).unwrap();
        let mut rng = SeededRng::new(20);
        let db = MessageDb::random(6, 4, 3, &mut rng).unwrap();
        let addr = PirServer::bind("127.0.0.1:0", db.clone())
            .unwrap()
            .spawn()
            .unwrap();
        (addr, db, params)
    }

    #[test]
    fn fetch_matches_local_computation() {
        let (addr, db, params) = test_setup();
        let mut rng = SeededRng::new(21);
        let query = generate_query(&params, &[0, 2], &[4], &mut rng).unwrap();
        let got = fetch(addr, &serialize_query(&query)).unwrap();
        let expected = serialize_answer(&compute_answer(&query, &db).unwrap());
        assert_eq!(got, expected);
        assert!(parse_answer(&got).is_ok());
    }

    #[test]
    fn malformed_query_yields_error_frame() {
        let (addr, _, _) = test_setup();
        let err = fetch(addr, "IPIR-Q v1 not a query\n").unwrap_err();
        assert!(matches!(err, Error::Transport(_)));
    }

    #[test]
    fn oversized_frame_refused_client_side() {
        let text = "x".repeat(MAX_FRAME_LEN + 1);
        let mut sink = Vec::new();
        assert!(matches!(
            write_frame(&mut sink, text.as_bytes()),
            Err(Error::Transport(_))
        ));
    }

    #[test]
    fn oversized_frame_refused_server_side() {
        let (addr, _, _) = test_setup();
        let mut stream = TcpStream::connect(addr).unwrap();
        // hand-rolled header claiming a payload beyond the limit
        let len = (MAX_FRAME_LEN as u32) + 1;
        stream.write_all(&len.to_be_bytes()).unwrap();
        stream.write_all(b"tiny").unwrap();
        stream.flush().unwrap();
        drop(stream.shutdown(std::net::Shutdown::Write));
        let reply = read_frame(&mut stream).unwrap();
        let text = String::from_utf8(reply).unwrap();
        assert!(text.starts_with("ERR "), "got {text:?}");
    }

    #[test]
    fn concurrent_clients_get_independent_answers() {
        let (addr, db, params) = test_setup();
        let mut handles = Vec::new();
        for seed in 0..8u64 {
            let db = db.clone();
            let params = params.clone();
            handles.push(thread::spawn(move || {
                let mut rng = SeededRng::new(seed);
                let side = rng.subset(1, 6);
                let complement: Vec<usize> = (0..6).filter(|i| !side.contains(i)).collect();
                let demand: Vec<usize> = rng
                    .subset(2, complement.len())
                    .into_iter()
                    .map(|i| complement[i])
                    .collect();
                let query = generate_query(&params, &demand, &side, &mut rng).unwrap();
                let got = fetch(addr, &serialize_query(&query)).unwrap();
                let expected = serialize_answer(&compute_answer(&query, &db).unwrap());
                assert_eq!(got, expected);
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
    }
}
