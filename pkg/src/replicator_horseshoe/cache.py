import datetime
import json
import logging
import sqlalchemy
from sqlalchemy import Table, Column, String, Boolean, DateTime, MetaData, insert, select, update, delete

from .horseshoe import HorseshoeCertificate, certificate_from_json, certificate_to_json
from .map_core import Params

logger = logging.getLogger(__name__)


class CertificateDatabase:
    """
    sqlite database of horseshoe certificates which persists between runs
    this can be used concurrently between multiple processes
    """

    def __init__(self, filename='.certificates.db'):
        self.engine = sqlalchemy.create_engine(f"sqlite:///{filename}")
        meta = MetaData()
        self.certificates = Table('certificates', meta,
                                  Column('a', String, primary_key=True),
                                  Column('b', String, primary_key=True),
                                  Column('threshold', String, primary_key=True),
                                  Column('valid', Boolean),
                                  Column('document', String),
                                  Column('insert_time', DateTime),
                                  sqlite_autoincrement=False)
        meta.create_all(self.engine)

    @staticmethod
    def _key(params: Params, threshold: float) -> dict:
        # shortest round-trip reprs identify the binary64 values exactly
        return {"a": repr(params.a), "b": repr(params.b), "threshold": repr(float(threshold))}

    def _where(self, params: Params, threshold: float):
        key = self._key(params, threshold)
        return ((self.certificates.c.a == key["a"])
                & (self.certificates.c.b == key["b"])
                & (self.certificates.c.threshold == key["threshold"]))

    def store(self, certificate: HorseshoeCertificate):
        """ records a replicator certificate, replacing an older one for the same key """
        if certificate.params is None:
            raise ValueError("only replicator certificates are cached")
        document = json.dumps(certificate_to_json(certificate))
        condition = self._where(certificate.params, certificate.threshold)
        with self.engine.connect() as connection:
            with connection.begin():
                existing = connection.execute(select(self.certificates.c.a).where(condition)).fetchone()
                if existing:
                    connection.execute(update(self.certificates).where(condition).values(
                        valid=certificate.valid, document=document, insert_time=datetime.datetime.now()))
                else:
                    connection.execute(insert(self.certificates), {
                        **self._key(certificate.params, certificate.threshold),
                        "valid": certificate.valid, "document": document, "insert_time": datetime.datetime.now()})

    def lookup(self, params: Params, threshold: float) -> HorseshoeCertificate | None:
        statement = select(self.certificates.c.document).where(self._where(params, threshold))
        with self.engine.connect() as connection:
            row = connection.execute(statement).fetchone()
        if row is None:
            return None
        logger.debug("certificate cache hit for a=%r b=%r", params.a, params.b)
        return certificate_from_json(json.loads(row.document))

    def remove(self, params: Params, threshold: float):
        """ removes a certificate from the database """
        statement = delete(self.certificates).where(self._where(params, threshold))
        with self.engine.connect() as connection:
            with connection.begin():
                connection.execute(statement)
