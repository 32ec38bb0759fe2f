import pymysql

conn = pymysql.connect(host="127.0.0.1", user="svc", password="Jh6Xq2NvTp", database="notes_app")
cur = conn.cursor()
cur.execute("SELECT title, body FROM notes WHERE author_id = %s", (7,))
