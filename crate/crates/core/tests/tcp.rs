//! Two models connected over a loopback socket: one sends a constant,
//! the other expects it on the far side of the wire.

use std::net::TcpListener;
use std::thread;

use cordon_core::{parse_model, run, ExecOptions};

fn free_port() -> u16 {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    listener.local_addr().unwrap().port()
}

#[test]
fn constant_crosses_a_loopback_socket() {
    let port = free_port();
    let receiver = format!(
        r#"<model name="receiver">
             <env id="wire">
               <config mode="tcp-server" port="{port}"/>
               <flow sarg="rx" sink="sink" darg="i"/>
             </env>
             <env id="sink">
               <config expect="0x2a"/>
               <arg name="i"/>
             </env>
           </model>"#
    );
    let sender = format!(
        r#"<model name="sender">
             <const id="msg" value="42">
               <flow sarg="Const" sink="wire" darg="tx"/>
             </const>
             <env id="wire">
               <config mode="tcp-client" port="{port}"/>
               <arg name="tx"/>
             </env>
           </model>"#
    );

    let server = thread::spawn(move || {
        let doc = parse_model(&receiver).unwrap();
        run(&doc.net, &ExecOptions::default()).unwrap()
    });
    let client = thread::spawn(move || {
        let doc = parse_model(&sender).unwrap();
        run(&doc.net, &ExecOptions::default()).unwrap()
    });

    let received = server.join().expect("server run panicked");
    let sent = client.join().expect("client run panicked");
    assert!(sent.ok(), "{:?}", sent.mismatches);
    assert!(received.ok(), "{:?}", received.mismatches);
    assert_eq!(received.arrivals["sink.i"], vec![vec![0x2a]]);
}
