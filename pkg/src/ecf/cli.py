"""``ecf`` command line tool.

    ecf keygen NAME                       create a keystore and NAME's entry file
    ecf create FILE.ecf [-i CONTENT]      new container, you as sole recipient
    ecf cat FILE.ecf                      print the content
    ecf export                            write your recipient entry
    ecf add-recipient FILE.ecf ENTRY
    ecf remove-recipient FILE.ecf --name NAME
    ecf set-content FILE.ecf [-i CONTENT]
    ecf info FILE.ecf                     public header fields only
    ecf bench                             performance experiments

The keystore path comes from ``--keystore`` or ``$ECF_KEYSTORE``.
Passwords are prompted for, or read from the variable named by
``--password-env`` for unattended use.
"""

from __future__ import annotations

import argparse
import getpass
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from . import container as ecf
from . import errors
from .keystore import (
    DEFAULT_KDF,
    SYM_AEGIS_256,
    SYM_AES_256_GCM,
    KdfConfig,
    SecretKey,
    export_recipient_entry,
    generate_keypair,
    load_key,
    save_key,
)
from .recipient import RecipientEntry, fingerprint
from .suite import DEFAULT_SUITE, derive_public, parse_suite_arg

log = logging.getLogger("ecf")

KEYSTORE_ENV = "ECF_KEYSTORE"
ENTRY_SUFFIX = ".pub"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_FILE_HASH = 10
EXIT_AEAD = 11
EXIT_PUBLIC_HASH = 12
EXIT_SIGNATURE = 13
EXIT_PRIVATE_HASH = 14
EXIT_FORMAT = 15
EXIT_POLICY = 20
EXIT_KEYSTORE = 30

# Checked in order, so subclasses come before their bases.
EXIT_CODES: list[tuple[type[BaseException], int]] = [
    (errors.FileHashMismatch, EXIT_FILE_HASH),
    (errors.AeadFailure, EXIT_AEAD),
    (errors.PublicHeaderHashMismatch, EXIT_PUBLIC_HASH),
    (errors.RecipientSignatureInvalid, EXIT_SIGNATURE),
    (errors.PrivateHashMismatch, EXIT_PRIVATE_HASH),
    (errors.KeystoreError, EXIT_KEYSTORE),
    (errors.NotARecipient, EXIT_POLICY),
    (errors.RecipientPolicyError, EXIT_POLICY),
    (errors.ContentTooLarge, EXIT_POLICY),
    (errors.DecodeError, EXIT_FORMAT),
    (errors.UnsupportedSuite, EXIT_FORMAT),
    (errors.InvalidKey, EXIT_FORMAT),
]


class UsageError(Exception):
    pass


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return EXIT_ERROR


# -- io helpers ----------------------------------------------------------
def atomic_write(path: Path, data: bytes, *, overwrite: bool = True, mode: int = 0o644) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    if not overwrite and path.exists():
        raise UsageError(f"{path} exists (use --force to replace it)")
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.chmod(tmp, mode)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def read_input(source: str | None) -> bytes:
    if source is None or source == "-":
        return sys.stdin.buffer.read()
    return Path(source).read_bytes()


def write_output(dest: str | None, data: bytes) -> None:
    if dest is None or dest == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        atomic_write(Path(dest), data, mode=0o600)


def keystore_path(args: argparse.Namespace) -> Path:
    path = args.keystore or os.environ.get(KEYSTORE_ENV)
    if not path:
        raise UsageError(f"no keystore given (use --keystore or set {KEYSTORE_ENV})")
    return Path(path)


def entry_path(keystore: Path) -> Path:
    return keystore.with_name(keystore.name + ENTRY_SUFFIX)


def read_password(args: argparse.Namespace, prompt: str = "Password: ", *, confirm: bool = False) -> str:
    if args.password_env:
        value = os.environ.get(args.password_env)
        if value is None:
            raise UsageError(f"environment variable {args.password_env} is not set")
        return value
    password = getpass.getpass(prompt)
    if confirm and getpass.getpass("Repeat password: ") != password:
        raise errors.KeystoreError("passwords do not match")
    if not password:
        raise errors.KeystoreError("password must not be empty")
    return password


def unlock(args: argparse.Namespace) -> SecretKey:
    path = keystore_path(args)
    data = path.read_bytes()
    return load_key(data, read_password(args, f"Password for {path}: "))


def own_entry(args: argparse.Namespace, sk: SecretKey, name: str | None) -> RecipientEntry:
    """Recipient entry for the keystore owner, from ``--name`` or the sidecar file."""
    if name:
        return export_recipient_entry(sk, name)
    sidecar = entry_path(keystore_path(args))
    if not sidecar.exists():
        raise UsageError(f"no --name given and {sidecar} not found")
    entry = RecipientEntry.from_bytes(sidecar.read_bytes())
    if entry.public_key != sk.public_key() or not entry.verify():
        raise UsageError(f"{sidecar} does not belong to this keystore")
    return entry


def mutation_options(args: argparse.Namespace) -> dict:
    return {"verify_signatures": not args.no_verify_recipients}


def store_container(args: argparse.Namespace, new: ecf.Container) -> None:
    dest = Path(args.output) if args.output else Path(args.file)
    atomic_write(dest, new.to_bytes())


# -- commands ------------------------------------------------------------
def cmd_keygen(args: argparse.Namespace) -> int:
    path = keystore_path(args)
    sidecar = entry_path(path)
    if not args.force:
        for p in (path, sidecar):
            if p.exists():
                raise UsageError(f"{p} exists (use --force to replace it)")
    password = read_password(args, f"New password for {path}: ", confirm=True)
    kdf = KdfConfig(args.kdf_iterations, args.kdf_memory, args.kdf_parallelism)
    sym = SYM_AEGIS_256 if args.aegis else SYM_AES_256_GCM
    with generate_keypair()[0] as sk:
        stored = save_key(sk, password, kdf, sym_enc_type=sym)
        entry = export_recipient_entry(sk, args.name)
    atomic_write(path, stored, mode=0o600)
    atomic_write(sidecar, entry.to_bytes())
    print(f"keystore:    {path}", file=sys.stderr)
    print(f"entry:       {sidecar}", file=sys.stderr)
    print(f"fingerprint: {entry.fingerprint()}")
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    with unlock(args) as sk:
        entry = own_entry(args, sk, args.name)
    write_output(args.output, entry.to_bytes())
    print(f"{entry.name}: {entry.fingerprint()}", file=sys.stderr)
    return EXIT_OK


def cmd_create(args: argparse.Namespace) -> int:
    target = Path(args.file)
    if target.exists() and not args.force:
        raise UsageError(f"{target} exists (use --force to replace it)")
    suite = args.suite
    content = read_input(args.input)
    with unlock(args) as sk:
        entry = own_entry(args, sk, args.name)
    container = ecf.encrypt([entry], content, suite)
    atomic_write(target, container.to_bytes())
    return EXIT_OK


def cmd_cat(args: argparse.Namespace) -> int:
    data = Path(args.file).read_bytes()
    with unlock(args) as sk:
        opened = ecf.decrypt(bytes(sk), data, verify_signatures=not args.no_verify_recipients)
    if args.recipients:
        for r in opened.recipients:
            print(f"{r.fingerprint()}  {r.name}")
        return EXIT_OK
    if not opened.is_blob:
        print(f"warning: unknown content type 0x{opened.content_type:08X}", file=sys.stderr)
    write_output(args.output, opened.content)
    return EXIT_OK


def cmd_add_recipient(args: argparse.Namespace) -> int:
    entry = RecipientEntry.from_bytes(Path(args.entry).read_bytes())
    if not entry.verify():
        raise errors.InvalidRecipientEntry(f"{args.entry}: name signature does not verify")
    print(f"adding {entry.name}: {entry.fingerprint()}", file=sys.stderr)
    data = Path(args.file).read_bytes()
    with unlock(args) as sk:
        new = ecf.add_recipient(
            bytes(sk),
            data,
            entry,
            allow_duplicate_names=args.allow_duplicate_names,
            **mutation_options(args),
        )
    store_container(args, new)
    return EXIT_OK


def cmd_remove_recipient(args: argparse.Namespace) -> int:
    public_key = None
    if args.entry:
        public_key = RecipientEntry.from_bytes(Path(args.entry).read_bytes()).public_key
    elif args.public_key:
        try:
            public_key = bytes.fromhex(args.public_key)
        except ValueError:
            raise UsageError("--public-key must be hex") from None
    data = Path(args.file).read_bytes()
    with unlock(args) as sk:
        new = ecf.remove_recipient(
            bytes(sk),
            data,
            public_key=public_key,
            name=args.name,
            allow_self_removal=args.allow_self_removal,
            **mutation_options(args),
        )
    store_container(args, new)
    return EXIT_OK


def cmd_set_content(args: argparse.Namespace) -> int:
    content = read_input(args.input)
    data = Path(args.file).read_bytes()
    with unlock(args) as sk:
        new = ecf.set_content(bytes(sk), data, content, **mutation_options(args))
    store_container(args, new)
    return EXIT_OK


def cmd_info(args: argparse.Namespace) -> int:
    data = Path(args.file).read_bytes()
    c = ecf.Container.parse(data)
    h = c.header
    print(f"version:        0x{h.version:08X}")
    print(f"cipher suite:   0x{c.suite.id:08X} ({c.suite.label}, {c.suite.name})")
    print(f"public length:  {h.public_length}")
    print(f"private length: {h.private_length}")
    print(f"decrypt blocks: {h.recipient_count}")
    print(f"file size:      {len(data)}")
    return EXIT_OK


def cmd_fingerprint(args: argparse.Namespace) -> int:
    if args.entry:
        entry = RecipientEntry.from_bytes(Path(args.entry).read_bytes())
        state = "valid" if entry.verify() else "INVALID SIGNATURE"
        print(f"{entry.fingerprint()}  {entry.name} ({state})")
    else:
        with unlock(args) as sk:
            print(fingerprint(derive_public(bytes(sk))))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    from .bench.runner import main as bench_main

    return bench_main(args.bench_args)


# -- parser --------------------------------------------------------------
def _suite_type(text: str):
    try:
        return parse_suite_arg(text)
    except (ValueError, errors.UnsupportedSuite) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecf", description="Encrypted container files.")
    parser.add_argument("--keystore", "-k", help=f"keystore file (default ${KEYSTORE_ENV})")
    parser.add_argument("--password-env", metavar="VAR", help="read the password from this environment variable")
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def container_cmd(name: str, func, help_text: str, *, writes: bool = False) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", help="container file")
        p.add_argument(
            "--no-verify-recipients",
            action="store_true",
            help="skip the recipient signature checks",
        )
        if writes:
            p.add_argument("--output", "-o", help="write the new container here instead of in place")
        p.set_defaults(func=func)
        return p

    p = sub.add_parser("keygen", help="generate a key pair and keystore")
    p.add_argument("name", help="recipient name to sign into the entry file")
    p.add_argument("--force", action="store_true", help="replace existing files")
    p.add_argument("--kdf-iterations", type=int, default=DEFAULT_KDF.iterations)
    p.add_argument("--kdf-memory", type=int, default=DEFAULT_KDF.memory_kib, help="KiB")
    p.add_argument("--kdf-parallelism", type=int, default=DEFAULT_KDF.parallelism)
    p.add_argument("--aegis", action="store_true", help="encrypt the keystore with AEGIS-256")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("export", help="write your recipient entry")
    p.add_argument("--name", help="name to sign (default: the keygen entry)")
    p.add_argument("--output", "-o", help="destination (default stdout)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("create", help="create a container with you as the only recipient")
    p.add_argument("file")
    p.add_argument("--input", "-i", help="content file (default stdin)")
    p.add_argument("--name", help="your recipient name (default: the keygen entry)")
    p.add_argument("--suite", "-s", type=_suite_type, default=DEFAULT_SUITE, help="I-IV or a hex id")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_create)

    p = container_cmd("cat", cmd_cat, "print the decrypted content")
    p.add_argument("--output", "-o", help="destination (default stdout)")
    p.add_argument("--recipients", action="store_true", help="list recipients instead of the content")

    p = container_cmd("add-recipient", cmd_add_recipient, "add a recipient entry", writes=True)
    p.add_argument("entry", help="recipient entry file")
    p.add_argument("--allow-duplicate-names", action="store_true")

    p = container_cmd("remove-recipient", cmd_remove_recipient, "remove a recipient", writes=True)
    sel = p.add_mutually_exclusive_group(required=True)
    sel.add_argument("--name")
    sel.add_argument("--public-key", metavar="HEX")
    sel.add_argument("--entry", help="entry file of the recipient to remove")
    p.add_argument("--allow-self-removal", action="store_true")

    p = container_cmd("set-content", cmd_set_content, "replace the content", writes=True)
    p.add_argument("--input", "-i", help="content file (default stdin)")

    p = sub.add_parser("info", help="show public header fields")
    p.add_argument("file")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("fingerprint", help="fingerprint of an entry file or of your key")
    p.add_argument("entry", nargs="?")
    p.set_defaults(func=cmd_fingerprint)

    # options after "bench" are handed to the bench runner untouched
    p = sub.add_parser("bench", help="run the performance experiments", add_help=False)
    p.set_defaults(func=cmd_bench, bench_args=[])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if args.command == "bench":
        args.bench_args = extra
    elif extra:
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ecf: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except errors.EcfError as exc:
        code = exit_code_for(exc)
        step = getattr(exc, "step", None)
        where = f" (decrypt step {step})" if step else ""
        print(f"ecf: {type(exc).__name__}{where}: {exc}", file=sys.stderr)
        return code
    except OSError as exc:
        print(f"ecf: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
