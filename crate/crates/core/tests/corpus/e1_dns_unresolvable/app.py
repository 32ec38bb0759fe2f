import pymysql

conn = pymysql.connect(host="gone.brightwave.io", user="svc", password="Mz2Pq7WxLe", database="notes_app")
cur = conn.cursor()
cur.execute("SELECT title, body FROM notes WHERE author_id = %s", (7,))
