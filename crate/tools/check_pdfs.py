#!/usr/bin/env python3
"""Cross-check PDFs with pypdf: strict parse, image XObjects per page and a
digest of each image's decoded samples.

usage: check_pdfs.py FILE.pdf...
"""
import hashlib
import sys

from pypdf import PdfReader
from pypdf.generic import IndirectObject


def images(resources, seen, out):
    xobjects = resources.get("/XObject") if resources else None
    if xobjects is None:
        return
    for ref in xobjects.get_object().values():
        if not isinstance(ref, IndirectObject):
            continue
        obj = ref.get_object()
        subtype = obj.get("/Subtype")
        if subtype == "/Image":
            out.append((ref.idnum, obj))
        elif subtype == "/Form" and ref.idnum not in seen:
            seen.add(ref.idnum)
            images(obj.get("/Resources"), seen, out)


def main(paths):
    status = 0
    for path in paths:
        try:
            reader = PdfReader(path, strict=True)
            listed = {}
            for index, page in enumerate(reader.pages):
                found = []
                images(page.get("/Resources"), set(), found)
                for idnum, obj in sorted(found, key=lambda x: x[0]):
                    if idnum in listed:
                        continue
                    filters = obj.get("/Filter")
                    if filters == "/DCTDecode":
                        digest = "jpeg"
                    else:
                        try:
                            digest = hashlib.sha256(obj.get_data()).hexdigest()[:16]
                        except Exception as exc:  # unsupported filters
                            digest = f"undecoded({exc.__class__.__name__})"
                    listed[idnum] = (index, obj.get("/Width"), obj.get("/Height"), digest)
            print(f"{path}: pages={len(reader.pages)} images={len(listed)}")
            for idnum, (page, w, h, digest) in listed.items():
                print(f"  page {page} obj {idnum} {w}x{h} {digest}")
        except Exception as exc:
            print(f"{path}: ERROR {exc}")
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
