import io
import struct
import sys

import pytest

from ecf import cli
from ecf.container import parse
from ecf.keystore import load_key
from ecf.recipient import RecipientEntry

LIGHT = ["--kdf-iterations", "1", "--kdf-memory", "64", "--kdf-parallelism", "1"]


class Env:
    def __init__(self, tmp_path, monkeypatch, capsysbinary):
        self.dir = tmp_path
        self.mp = monkeypatch
        self.cap = capsysbinary
        monkeypatch.setenv("PW", "hunter2")
        monkeypatch.chdir(tmp_path)

    def run(self, *args, user=None, stdin=b""):
        self.mp.setattr(sys, "stdin", io.TextIOWrapper(io.BytesIO(stdin)))
        argv = ["--password-env", "PW"]
        if user:
            argv += ["-k", f"{user}.eck"]
        code = cli.main(argv + [str(a) for a in args])
        out, err = self.cap.readouterr()
        return code, out, err.decode()

    def keygen(self, user, name=None):
        code, out, _ = self.run("keygen", name or user, *LIGHT, user=user)
        assert code == 0
        return out.decode().split()[-1]


@pytest.fixture
def env(tmp_path, monkeypatch, capsysbinary):
    return Env(tmp_path, monkeypatch, capsysbinary)


class TestKeygen:
    def test_creates_files(self, env):
        fp = env.keygen("alice", "Alice")
        assert (env.dir / "alice.eck").exists()
        entry = RecipientEntry.from_bytes((env.dir / "alice.eck.pub").read_bytes())
        assert entry.name == "Alice" and entry.verify()
        assert entry.fingerprint() == fp
        assert load_key((env.dir / "alice.eck").read_bytes(), "hunter2").public_key() == entry.public_key

    def test_no_overwrite(self, env):
        env.keygen("alice")
        before = (env.dir / "alice.eck").read_bytes()
        code, _, err = env.run("keygen", "alice", *LIGHT, user="alice")
        assert code == cli.EXIT_USAGE and "--force" in err
        assert (env.dir / "alice.eck").read_bytes() == before
        code, _, _ = env.run("keygen", "alice", "--force", *LIGHT, user="alice")
        assert code == 0
        assert (env.dir / "alice.eck").read_bytes() != before

    def test_password_mismatch(self, env, monkeypatch):
        answers = iter(["one", "two"])
        monkeypatch.setattr(cli.getpass, "getpass", lambda prompt="": next(answers))
        code = cli.main(["-k", "x.eck", "keygen", "X", *LIGHT])
        assert code == cli.EXIT_KEYSTORE
        assert not (env.dir / "x.eck").exists()

    def test_prompted_password(self, env, monkeypatch):
        monkeypatch.setattr(cli.getpass, "getpass", lambda prompt="": "typed")
        assert cli.main(["-k", "x.eck", "keygen", "X", *LIGHT]) == 0
        load_key((env.dir / "x.eck").read_bytes(), "typed")

    def test_keystore_from_environment(self, env, monkeypatch):
        monkeypatch.setenv("ECF_KEYSTORE", str(env.dir / "envkey.eck"))
        code, _, _ = env.run("keygen", "E", *LIGHT)
        assert code == 0 and (env.dir / "envkey.eck").exists()

    def test_missing_keystore(self, env, monkeypatch):
        monkeypatch.delenv("ECF_KEYSTORE", raising=False)
        (env.dir / "f.ecf").write_bytes(b"")
        code, _, err = env.run("cat", "f.ecf")
        assert code == cli.EXIT_USAGE and "ECF_KEYSTORE" in err


class TestContainerCommands:
    def test_create_and_cat(self, env):
        env.keygen("alice", "Alice")
        assert env.run("create", "s.ecf", user="alice", stdin=b"top secret")[0] == 0
        code, out, _ = env.run("cat", "s.ecf", user="alice")
        assert (code, out) == (0, b"top secret")

    def test_create_empty_stdin(self, env):
        env.keygen("alice")
        env.run("create", "e.ecf", user="alice")
        assert env.run("cat", "e.ecf", user="alice")[1] == b""

    def test_create_from_file_with_suite(self, env):
        env.keygen("alice")
        (env.dir / "in.bin").write_bytes(b"\x00\x01binary")
        assert env.run("create", "s.ecf", "-i", "in.bin", "--suite", "0x01010201", user="alice")[0] == 0
        raw = (env.dir / "s.ecf").read_bytes()
        assert struct.unpack_from("<I", raw, 4)[0] == 0x01010201
        assert env.run("cat", "s.ecf", user="alice")[1] == b"\x00\x01binary"

    def test_create_no_overwrite(self, env):
        env.keygen("alice")
        env.run("create", "s.ecf", user="alice", stdin=b"1")
        assert env.run("create", "s.ecf", user="alice", stdin=b"2")[0] == cli.EXIT_USAGE

    def test_bad_suite(self, env):
        with pytest.raises(SystemExit) as info:
            cli.main(["create", "x.ecf", "--suite", "0xDEADBEEF"])
        assert info.value.code == 2

    def test_non_recipient(self, env):
        env.keygen("alice")
        env.keygen("mallory")
        env.run("create", "s.ecf", user="alice", stdin=b"x")
        code, out, err = env.run("cat", "s.ecf", user="mallory")
        assert code == cli.EXIT_POLICY and out == b"" and "NotARecipient" in err

    def test_wrong_password(self, env, monkeypatch):
        env.keygen("alice")
        env.run("create", "s.ecf", user="alice", stdin=b"x")
        monkeypatch.setenv("PW", "nope")
        assert env.run("cat", "s.ecf", user="alice")[0] == cli.EXIT_KEYSTORE

    def test_corruption_exit_codes(self, env):
        env.keygen("alice")
        env.run("create", "s.ecf", user="alice", stdin=b"x" * 100)
        raw = (env.dir / "s.ecf").read_bytes()
        bad = bytearray(raw)
        bad[-5] ^= 1
        (env.dir / "bad.ecf").write_bytes(bytes(bad))
        code, _, err = env.run("cat", "bad.ecf", user="alice")
        assert code == cli.EXIT_FILE_HASH and "step 2" in err
        (env.dir / "short.ecf").write_bytes(raw[:30])
        assert env.run("cat", "short.ecf", user="alice")[0] == cli.EXIT_FORMAT

    def test_exit_code_table(self):
        from ecf import errors as E

        table = {
            E.FileHashMismatch: 10,
            E.AeadFailure: 11,
            E.PublicHeaderHashMismatch: 12,
            E.RecipientSignatureInvalid: 13,
            E.PrivateHashMismatch: 14,
            E.NotARecipient: 20,
            E.DuplicateName: 20,
            E.WrongPassword: 30,
            E.TruncatedFile: 15,
        }
        for cls, code in table.items():
            assert cli.exit_code_for(cls("boom")) == code
        assert cli.exit_code_for(E.KeystoreAuthenticationFailed()) == 30

    def test_info_shows_public_fields_only(self, env):
        env.keygen("alice", "Alice")
        env.run("create", "s.ecf", user="alice", stdin=b"classified")
        code, out, _ = env.run("info", "s.ecf")
        text = out.decode()
        assert code == 0
        m = parse((env.dir / "s.ecf").read_bytes()).header.m
        assert f"decrypt blocks: {m}" in text
        assert "0x01010102" in text
        assert "Alice" not in text and "classified" not in text and "recipients:" not in text

    def test_export_fingerprint_matches(self, env):
        fp = env.keygen("bob", "Bob")
        code, out, err = env.run("export", "-o", "bob.entry", user="bob")
        assert code == 0 and fp in err
        assert RecipientEntry.from_bytes((env.dir / "bob.entry").read_bytes()).fingerprint() == fp
        code, out, _ = env.run("fingerprint", "bob.entry")
        assert fp in out.decode() and "valid" in out.decode()

    def test_no_plaintext_written(self, env):
        env.keygen("alice")
        env.keygen("bob", "Bob")
        env.run("create", "s.ecf", user="alice", stdin=b"PLAINTEXT-MARKER")
        env.run("add-recipient", "s.ecf", "bob.eck.pub", user="alice")
        env.run("set-content", "s.ecf", user="alice", stdin=b"PLAINTEXT-MARKER-2")
        for f in env.dir.iterdir():
            assert b"PLAINTEXT-MARKER" not in f.read_bytes(), f


class TestWorkflow:
    def test_full_scenario(self, env):
        for user, name in [("alice", "Alice"), ("bob", "Bob"), ("charlie", "Charlie"), ("job", "deploy-job")]:
            env.keygen(user, name)
        assert env.run("create", "cert.ecf", user="alice", stdin=b"cert-v1")[0] == 0
        assert env.run("cat", "cert.ecf", user="alice")[1] == b"cert-v1"
        for user in ("bob", "charlie", "job"):
            env.run("export", "-o", f"{user}.entry", user=user)
            assert env.run("add-recipient", "cert.ecf", f"{user}.entry", user="alice")[0] == 0
        for user in ("bob", "charlie", "job"):
            assert env.run("cat", "cert.ecf", user=user)[1] == b"cert-v1"
        _, listing, _ = env.run("cat", "cert.ecf", "--recipients", user="charlie")
        assert [ln.split()[-1] for ln in listing.decode().splitlines()] == ["Alice", "Bob", "Charlie", "deploy-job"]
        # duplicate add is refused
        assert env.run("add-recipient", "cert.ecf", "bob.entry", user="alice")[0] == cli.EXIT_POLICY

        (env.dir / "cert-archived.ecf").write_bytes((env.dir / "cert.ecf").read_bytes())
        assert env.run("remove-recipient", "cert.ecf", "--name", "Bob", user="alice")[0] == 0
        assert env.run("cat", "cert.ecf", user="bob")[0] == cli.EXIT_POLICY
        assert env.run("cat", "cert-archived.ecf", user="bob")[1] == b"cert-v1"
        assert env.run("remove-recipient", "cert.ecf", "--name", "Alice", user="alice")[0] == cli.EXIT_POLICY

        assert env.run("set-content", "cert.ecf", user="charlie", stdin=b"cert-v2")[0] == 0
        for user in ("alice", "charlie", "job"):
            assert env.run("cat", "cert.ecf", user=user)[1] == b"cert-v2"
        assert env.run("cat", "cert.ecf", user="bob")[0] == cli.EXIT_POLICY
        assert env.run("cat", "cert-archived.ecf", user="bob")[1] == b"cert-v1"

    def test_output_flag_keeps_original(self, env):
        env.keygen("alice")
        env.keygen("bob", "Bob")
        env.run("create", "a.ecf", user="alice", stdin=b"x")
        before = (env.dir / "a.ecf").read_bytes()
        env.run("add-recipient", "a.ecf", "bob.eck.pub", "-o", "b.ecf", user="alice")
        assert (env.dir / "a.ecf").read_bytes() == before
        assert env.run("cat", "b.ecf", user="bob")[1] == b"x"

    def test_remove_by_entry_and_key(self, env):
        env.keygen("alice")
        env.keygen("bob", "Bob")
        env.run("create", "a.ecf", user="alice", stdin=b"x")
        env.run("add-recipient", "a.ecf", "bob.eck.pub", user="alice")
        assert env.run("remove-recipient", "a.ecf", "--entry", "bob.eck.pub", user="alice")[0] == 0
        assert env.run("cat", "a.ecf", user="bob")[0] == cli.EXIT_POLICY
        env.run("add-recipient", "a.ecf", "bob.eck.pub", user="alice")
        pk = RecipientEntry.from_bytes((env.dir / "bob.eck.pub").read_bytes()).public_key.hex()
        assert env.run("remove-recipient", "a.ecf", "--public-key", pk, user="alice")[0] == 0
        assert env.run("remove-recipient", "a.ecf", "--public-key", "zz", user="alice")[0] == cli.EXIT_USAGE

    def test_no_verify_flag(self, env):
        env.keygen("alice")
        env.run("create", "a.ecf", user="alice", stdin=b"x")
        assert env.run("cat", "a.ecf", "--no-verify-recipients", user="alice")[1] == b"x"


def test_bench_subcommand(env):
    code, out, _ = env.run(
        "bench", "--sizes", "0.01", "--counts", "2,3,4", "--suites", "II", "-r", "3", "-w", "0", "--min-seconds", "0", "-q"
    )
    assert code == 0
    lines = out.decode().splitlines()
    assert lines[0] == "suite,op,size,n,deception,validation,mean_seconds"
    assert len(lines) > 5
