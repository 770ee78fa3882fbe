"""``fedctl``: command-line access to the federation."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .client import AllSourcesFailed, DirectorUnreachable, FedClient, OriginUnreachable, StorageFull
from .geo import GeoPoint
from .namespace import MalformedPath, UnknownNamespace

EXIT_OK, EXIT_NOT_FOUND, EXIT_FAILED, EXIT_USAGE = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--director", default=os.environ.get("FEDCTL_DIRECTOR"),
                        help="director URL (default: $FEDCTL_DIRECTOR)")
    common.add_argument("--geo", help="client location 'lat,lon' sent as X-Client-Geo")
    common.add_argument("--client-name", help="name reported in accounting records")

    parser = _Parser(prog="fedctl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    get = sub.add_parser("get", parents=[common], help="download an object")
    get.add_argument("path")
    get.add_argument("-o", "--output", required=True)
    get.add_argument("--no-cache", action="store_true", help="read straight from the origin")
    get.add_argument("--follow-redirect", action="store_true",
                     help="use the director's 307 redirect instead of resolve")

    put = sub.add_parser("put", parents=[common], help="write a local file to its origin")
    put.add_argument("file")
    put.add_argument("path")

    locate = sub.add_parser("locate", parents=[common], help="show origin and ranked caches")
    locate.add_argument("path")

    stats = sub.add_parser("stats", parents=[common], help="aggregate accounting")
    stats.add_argument("--service")
    stats.add_argument("--since", type=float)
    return parser


def run(args) -> int:
    if not args.director:
        print("fedctl: no director URL (use --director or FEDCTL_DIRECTOR)", file=sys.stderr)
        return EXIT_USAGE
    geo = GeoPoint.parse(args.geo) if args.geo else None
    client = FedClient(args.director, client_geo=geo, client_name=args.client_name)

    if args.command == "get":
        result = client.fetch(args.path, args.output, bypass_cache=args.no_cache,
                              follow_redirect=args.follow_redirect)
        print(json.dumps({"bytes": result.bytes, "source_used": result.source_used,
                          "cache_hit": result.cache_hit}))
    elif args.command == "put":
        if not os.path.isfile(args.file):
            print(f"fedctl: no such file {args.file}", file=sys.stderr)
            return EXIT_USAGE
        print(json.dumps(client.store(args.file, args.path)))
    elif args.command == "locate":
        print(json.dumps(client.locate(args.path).to_dict(), indent=2))
    elif args.command == "stats":
        print(json.dumps(client.stats(args.service, args.since), indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return run(args)
    except (UnknownNamespace, FileNotFoundError) as exc:
        print(f"fedctl: not found: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except (MalformedPath, ValueError) as exc:
        print(f"fedctl: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AllSourcesFailed, DirectorUnreachable, OriginUnreachable, StorageFull) as exc:
        print(f"fedctl: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
