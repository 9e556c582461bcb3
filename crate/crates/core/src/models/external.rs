use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::protocol::{Handshake, Request, Response};
use super::{validate_probability_rows, Estimator, ModelError};
use crate::TimeSeries;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

/// A black-box classifier in another process or behind a socket.
///
/// Requests on one connection are serialized; the model may still be shared
/// across threads.
pub struct ExternalModel {
    classes: Vec<String>,
    timeout: Duration,
    conn: Mutex<Connection>,
    child: Option<Mutex<Child>>,
}

fn spawn_reader<R: Read + Send + 'static>(reader: R) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(reader).lines() {
            let failed = line.is_err();
            if tx.send(line).is_err() || failed {
                break;
            }
        }
    });
    rx
}

impl ExternalModel {
    /// Runs `command` through `sh -c` and talks to it over stdin/stdout.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, ModelError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut model = Self::handshake(Box::new(stdin), spawn_reader(stdout), timeout);
        if let Err(ModelError::ProcessExit(_)) = &model {
            let status = child.wait().map(|s| s.to_string()).unwrap_or_else(|e| e.to_string());
            return Err(ModelError::ProcessExit(format!("{command:?} ended before the handshake ({status})")));
        }
        if let Ok(m) = &mut model {
            m.child = Some(Mutex::new(child));
        } else {
            let _ = child.kill();
            let _ = child.wait();
        }
        model
    }

    /// Connects to a model server at `addr` (`host:port`).
    pub fn connect(addr: &str, timeout: Duration) -> Result<Self, ModelError> {
        let target = addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| ModelError::ProtocolViolation(format!("address {addr:?} did not resolve")))?;
        let stream = TcpStream::connect_timeout(&target, timeout)?;
        let reader = stream.try_clone()?;
        Self::handshake(Box::new(stream), spawn_reader(reader), timeout)
    }

    /// Uses an already established pair of streams.
    pub fn from_streams<R, W>(reader: R, writer: W, timeout: Duration) -> Result<Self, ModelError>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        Self::handshake(Box::new(writer), spawn_reader(reader), timeout)
    }

    fn handshake(
        writer: Box<dyn Write + Send>,
        lines: Receiver<std::io::Result<String>>,
        timeout: Duration,
    ) -> Result<Self, ModelError> {
        let line = receive(&lines, timeout)?;
        let hello: Handshake = serde_json::from_str(&line)
            .map_err(|e| ModelError::ProtocolViolation(format!("bad handshake {line:?}: {e}")))?;
        if hello.classes.is_empty() {
            return Err(ModelError::ProtocolViolation("handshake lists no classes".into()));
        }
        if hello.classes.iter().collect::<BTreeSet<_>>().len() != hello.classes.len() {
            return Err(ModelError::ProtocolViolation("handshake repeats a class".into()));
        }
        Ok(Self { classes: hello.classes, timeout, conn: Mutex::new(Connection { writer, lines, next_id: 0 }), child: None })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }
}

fn receive(lines: &Receiver<std::io::Result<String>>, timeout: Duration) -> Result<String, ModelError> {
    loop {
        match lines.recv_timeout(timeout) {
            Ok(Ok(line)) if line.trim().is_empty() => continue,
            Ok(Ok(line)) => return Ok(line),
            Ok(Err(e)) => return Err(ModelError::Io(e)),
            Err(RecvTimeoutError::Timeout) => return Err(ModelError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => return Err(ModelError::ProcessExit("connection closed".into())),
        }
    }
}

impl Estimator<f64> for ExternalModel {
    fn output_names(&self) -> Vec<String> {
        self.classes.clone()
    }

    fn predict(&self, batch: &[TimeSeries<f64>]) -> Result<Vec<Vec<f64>>, ModelError> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let mut conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        conn.next_id += 1;
        let id = conn.next_id;
        let request = Request { id, series: batch.iter().map(|s| s.values().to_vec()).collect() };
        let mut payload = serde_json::to_vec(&request).map_err(|e| ModelError::ProtocolViolation(e.to_string()))?;
        payload.push(b'\n');
        let sent = conn.writer.write_all(&payload).and_then(|_| conn.writer.flush());
        if let Err(e) = sent {
            return Err(ModelError::ProcessExit(format!("cannot send request: {e}")));
        }
        let line = receive(&conn.lines, self.timeout)?;
        let response: Response = serde_json::from_str(&line)
            .map_err(|e| ModelError::ProtocolViolation(format!("malformed response: {e}")))?;
        if response.id != Some(id) {
            return Err(ModelError::ProtocolViolation(format!("response id {:?} does not echo request id {id}", response.id)));
        }
        if let Some(error) = response.error {
            return Err(ModelError::ProtocolViolation(format!("model reported an error: {error}")));
        }
        let probs = response.probs.ok_or_else(|| ModelError::ProtocolViolation("response has no probs".into()))?;
        validate_probability_rows(&probs, batch.len(), self.classes.len())?;
        Ok(probs)
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        if let Some(child) = &self.child {
            let mut child = child.lock().unwrap_or_else(|e| e.into_inner());
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use std::io::{pipe, PipeReader, PipeWriter};

    use super::*;

    /// A scripted peer: reads requests, replies with whatever `reply` returns.
    fn mock_peer(reply: impl Fn(u64, usize) -> Option<String> + Send + 'static, handshake: &str) -> (PipeReader, PipeWriter) {
        let (client_reads, mut server_writes) = pipe().unwrap();
        let (server_reads, client_writes) = pipe().unwrap();
        let hello = handshake.to_string();
        thread::spawn(move || {
            writeln!(server_writes, "{hello}").unwrap();
            for line in BufReader::new(server_reads).lines() {
                let req: Request = serde_json::from_str(&line.unwrap()).unwrap();
                match reply(req.id, req.series.len()) {
                    Some(text) => {
                        if writeln!(server_writes, "{text}").is_err() {
                            return;
                        }
                    }
                    None => return,
                }
            }
        });
        (client_reads, client_writes)
    }

    fn batch(n: usize) -> Vec<TimeSeries<f64>> {
        (0..n).map(|i| TimeSeries::new(vec![i as f64, 1.0]).unwrap()).collect()
    }

    const HELLO: &str = r#"{"classes":["a","b","c"]}"#;

    #[test]
    fn uniform_peer() {
        let (r, w) = mock_peer(
            |id, n| Some(serde_json::to_string(&Response { id: Some(id), probs: Some(vec![vec![1.0 / 3.0; 3]; n]), error: None }).unwrap()),
            HELLO,
        );
        let m = ExternalModel::from_streams(r, w, Duration::from_secs(5)).unwrap();
        assert_eq!(m.classes(), &["a", "b", "c"]);
        let p = m.predict(&batch(4)).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.iter().flatten().all(|&v| v == 1.0 / 3.0));
        assert_eq!(m.predict(&batch(2)).unwrap().len(), 2);
    }

    #[test]
    fn row_not_summing_to_one_is_a_violation() {
        let (r, w) = mock_peer(|id, n| Some(format!(r#"{{"id":{id},"probs":{}}}"#, serde_json::to_string(&vec![vec![0.3, 0.3, 0.3]; n]).unwrap())), HELLO);
        let m = ExternalModel::from_streams(r, w, Duration::from_secs(5)).unwrap();
        assert!(matches!(m.predict(&batch(1)), Err(ModelError::ProtocolViolation(_))));
    }

    #[test]
    fn wrong_id_and_wrong_row_count() {
        let (r, w) = mock_peer(|id, _| Some(format!(r#"{{"id":{},"probs":[[1,0,0]]}}"#, id + 1)), HELLO);
        let m = ExternalModel::from_streams(r, w, Duration::from_secs(5)).unwrap();
        assert!(matches!(m.predict(&batch(1)), Err(ModelError::ProtocolViolation(_))));

        let (r, w) = mock_peer(|id, _| Some(format!(r#"{{"id":{id},"probs":[[1,0,0]]}}"#)), HELLO);
        let m = ExternalModel::from_streams(r, w, Duration::from_secs(5)).unwrap();
        assert!(matches!(m.predict(&batch(3)), Err(ModelError::ProtocolViolation(_))));
    }

    #[test]
    fn silent_peer_times_out() {
        let (r, w) = mock_peer(|_, _| Some(String::new()), HELLO);
        let m = ExternalModel::from_streams(r, w, Duration::from_millis(200)).unwrap();
        assert!(matches!(m.predict(&batch(1)), Err(ModelError::Timeout(_))));
    }

    #[test]
    fn closed_peer_is_process_exit() {
        let (r, w) = mock_peer(|_, _| None, HELLO);
        let m = ExternalModel::from_streams(r, w, Duration::from_secs(5)).unwrap();
        assert!(matches!(m.predict(&batch(1)), Err(ModelError::ProcessExit(_))));
    }

    #[test]
    fn bad_handshakes() {
        let (r, w) = mock_peer(|_, _| None, r#"{"classes":[]}"#);
        assert!(matches!(ExternalModel::from_streams(r, w, Duration::from_secs(5)), Err(ModelError::ProtocolViolation(_))));
        let (r, w) = mock_peer(|_, _| None, "hello");
        assert!(matches!(ExternalModel::from_streams(r, w, Duration::from_secs(5)), Err(ModelError::ProtocolViolation(_))));
    }

    #[test]
    fn subprocess_transport() {
        let script = r#"echo '{"classes":["x","y"]}'; while read -r line; do id=$(echo "$line" | sed 's/.*"id":\([0-9]*\).*/\1/'); echo "{\"id\":$id,\"probs\":[[0.25,0.75]]}"; done"#;
        let m = ExternalModel::spawn(script, Duration::from_secs(10)).unwrap();
        assert_eq!(m.predict(&batch(1)).unwrap(), vec![vec![0.25, 0.75]]);
        assert_eq!(m.predict(&batch(1)).unwrap(), vec![vec![0.25, 0.75]]);
        assert!(matches!(ExternalModel::spawn("exit 3", Duration::from_secs(10)), Err(ModelError::ProcessExit(_))));
    }
}
